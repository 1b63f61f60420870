// Reader for the review sheet the service hands back: a run of '# key: value'
// preamble lines followed by ordinary CSV (minimal quoting, doubled quotes).

export function parseCsv(text: string): string[][] {
  const rows: string[][] = [];
  let field = '';
  let row: string[] = [];
  let inQuotes = false;
  let sawAny = false;

  const pushField = () => {
    row.push(field);
    field = '';
  };
  const pushRow = () => {
    pushField();
    rows.push(row);
    row = [];
  };

  for (let i = 0; i < text.length; i++) {
    const ch = text[i];
    sawAny = true;
    if (inQuotes) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          inQuotes = false;
        }
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      inQuotes = true;
    } else if (ch === ',') {
      pushField();
    } else if (ch === '\n') {
      pushRow();
    } else if (ch === '\r' && text[i + 1] === '\n') {
      pushRow();
      i++;
    } else {
      field += ch;
    }
  }
  if (field !== '' || row.length > 0 || (sawAny && !text.endsWith('\n'))) {
    pushRow();
  }
  return rows;
}

export interface ParsedSheet {
  meta: Record<string, string>;
  header: string[];
  rows: string[][];
}

export function parseSheet(text: string): ParsedSheet {
  const meta: Record<string, string> = {};
  let pos = 0;
  while (pos < text.length) {
    const end = text.indexOf('\n', pos);
    const lineEnd = end === -1 ? text.length : end;
    const line = text.slice(pos, lineEnd);
    if (!line.startsWith('#')) break;
    const payload = line.slice(1).trim();
    const colon = payload.indexOf(':');
    if (colon !== -1) {
      meta[payload.slice(0, colon).trim()] = payload.slice(colon + 1).trim();
    }
    pos = lineEnd + 1;
  }
  const body = parseCsv(text.slice(pos));
  const header = body.length > 0 ? body[0] : [];
  return { meta, header, rows: body.slice(1) };
}
