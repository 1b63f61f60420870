// Live hint for the new-concept gloss form: a good gloss names the genus
// (the parent's label) and adds a differentia. The authoritative check runs
// server-side at validation; this mirrors it closely enough to warn while
// the expert is still typing.

const FUNCTION_WORDS = new Set([
  'a', 'an', 'the', 'of', 'in', 'on', 'at', 'to', 'for', 'by', 'with',
  'and', 'or', 'that', 'which', 'who', 'whose', 'is', 'are', 'was', 'were',
  'be', 'been', 'being', 'as', 'its', 'it', 'this', 'these', 'those',
  'from', 'into', 'over', 'under', 'has', 'have', 'had', 'any', 'some',
]);

function fold(text: string): string {
  return text.normalize('NFC').toLowerCase().split(/\s+/).filter(Boolean).join(' ');
}

function stripPunct(word: string): string {
  return word.replace(/^[.,;:!?()'"]+|[.,;:!?()'"]+$/g, '');
}

function contentWords(text: string): string[] {
  return fold(text)
    .split(' ')
    .map(stripPunct)
    .filter((w) => w && !FUNCTION_WORDS.has(w));
}

/**
 * Returns a warning to show next to the gloss field, or null when the gloss
 * looks structurally fine. Candidates without an in-document parent get no
 * genus expectation.
 */
export function genusHint(gloss: string, parentLabel: string): string | null {
  if (!parentLabel.trim() || !gloss.trim()) return null;

  const foldedGloss = ' ' + fold(gloss).split(' ').map(stripPunct).join(' ') + ' ';
  const target = ' ' + fold(parentLabel) + ' ';
  if (!foldedGloss.includes(target)) {
    return `gloss does not mention the genus '${parentLabel}'`;
  }

  const genusWords = new Set(fold(parentLabel).split(' '));
  const differentia = contentWords(gloss).filter((w) => !genusWords.has(w));
  if (differentia.length === 0) {
    return 'gloss names the genus but adds no differentia';
  }
  return null;
}
