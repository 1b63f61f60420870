// Single-page console for one annotation session. The app holds no domain
// state of its own: everything rendered comes from the service, and each
// decision waits for the service acknowledgment before the view advances.

import {
  AnnotationClient,
  ConnectionError,
  Decision,
  ServiceError,
  SessionView,
  SheetViolation,
} from './api';
import { genusHint } from './genus';
import { parseSheet } from './csv';

type Child = Node | string;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === 'class') node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

export class App {
  private view: SessionView | null = null;
  private pending = false;
  private banner: string | null = null;
  private bannerRetry = false;
  private formOpen = false;
  private glossDraft = '';
  private sheetText: string | null = null;
  private finalized: Record<string, number> | null = null;
  private violations: SheetViolation[] = [];
  private lastOp: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: AnnotationClient,
  ) {}

  start(): Promise<void> {
    this.root.ownerDocument.addEventListener('keydown', (event) => this.onKey(event));
    this.render();
    this.lastOp = this.refresh();
    return this.lastOp;
  }

  /** Resolves once the operation in flight (if any) has settled. Test hook. */
  flush(): Promise<void> {
    return this.lastOp;
  }

  private async refresh(): Promise<void> {
    this.pending = true;
    this.render();
    try {
      this.view = await this.api.session();
      this.banner = null;
      this.bannerRetry = false;
      if (this.view.done && this.finalized === null) await this.loadSheet();
    } catch (err) {
      this.fail(err);
    } finally {
      this.pending = false;
      this.render();
    }
  }

  private async loadSheet(): Promise<void> {
    this.sheetText = await this.api.sheet();
  }

  private decide(decision: Decision): void {
    if (this.pending || !this.view || this.view.done) return;
    this.lastOp = this.decideNow(decision);
  }

  private async decideNow(decision: Decision): Promise<void> {
    this.pending = true;
    this.banner = null;
    this.render();
    try {
      this.view = await this.api.decide(decision);
      this.formOpen = false;
      this.glossDraft = '';
      if (this.view.done) await this.loadSheet();
    } catch (err) {
      this.fail(err);
    } finally {
      this.pending = false;
      this.render();
    }
  }

  private runFinalize(): void {
    if (this.pending || this.finalized !== null || this.violations.length > 0) return;
    this.lastOp = this.finalizeNow();
  }

  private async finalizeNow(): Promise<void> {
    this.pending = true;
    this.banner = null;
    this.render();
    try {
      const result = await this.api.finalize();
      this.finalized = result.mapping;
    } catch (err) {
      if (err instanceof ServiceError && err.violations.length > 0) {
        this.violations = err.violations;
      } else {
        this.fail(err);
      }
    } finally {
      this.pending = false;
      this.render();
    }
  }

  private fail(err: unknown): void {
    if (err instanceof ConnectionError) {
      this.banner = err.message;
      this.bannerRetry = true;
    } else if (err instanceof Error) {
      this.banner = err.message;
      this.bannerRetry = false;
    } else {
      this.banner = String(err);
      this.bannerRetry = false;
    }
  }

  private onKey(event: KeyboardEvent): void {
    if (this.pending || this.formOpen || !this.view || this.view.done) return;
    const target = event.target as HTMLElement | null;
    if (target && /^(input|textarea|select)$/i.test(target.tagName)) return;
    const key = event.key;
    if (key >= '1' && key <= '9') {
      const hit = this.view.hits[Number(key) - 1];
      if (hit) this.decide({ action: 'accept', gid: hit.gid });
    } else if (key === 'n' || key === 'N') {
      this.openForm();
    } else if (key === 's' || key === 'S') {
      this.decide({ action: 'skip' });
    }
  }

  private openForm(): void {
    if (this.pending || !this.view?.candidate) return;
    this.formOpen = true;
    this.glossDraft = this.view.candidate.gloss;
    this.render();
  }

  // -- rendering ---------------------------------------------------------------

  private render(): void {
    this.root.replaceChildren();
    this.root.className = 'app';
    if (this.banner !== null) this.root.append(this.renderBanner());
    if (this.view === null) {
      if (this.banner === null) this.root.append(el('p', { id: 'loading' }, 'connecting to the annotation service...'));
      return;
    }
    if (this.finalized !== null) {
      this.root.append(this.renderMapping(this.finalized));
      return;
    }
    this.root.append(
      el('div', { id: 'progress' }, `${this.view.index} / ${this.view.total}`),
    );
    if (this.view.done) {
      this.root.append(this.renderReview());
    } else if (this.view.candidate) {
      this.root.append(this.renderCandidate());
    }
  }

  private renderBanner(): HTMLElement {
    const banner = el('div', { id: 'banner', class: 'banner', role: 'alert' }, this.banner ?? '');
    if (this.bannerRetry) {
      const retry = el('button', { id: 'retry', type: 'button' }, 'Retry');
      retry.addEventListener('click', () => {
        this.lastOp = this.refresh();
      });
      banner.append(' ', retry);
    }
    return banner;
  }

  private renderCandidate(): HTMLElement {
    const view = this.view!;
    const candidate = view.candidate!;
    const card = el(
      'section',
      { class: 'candidate' },
      el('h2', { class: 'label' }, candidate.label),
      el(
        'p',
        { class: 'meta' },
        el('span', { class: 'kind' }, candidate.kind),
        candidate.parent_label
          ? el('span', { class: 'parent' }, ` under ${candidate.parent_label}`)
          : '',
      ),
      el('p', { class: 'gloss' }, candidate.gloss || '(no gloss in the source ontology)'),
    );

    const hits = el('ol', { id: 'hits' });
    view.hits.forEach((hit, i) => {
      const button = el(
        'button',
        { type: 'button', class: 'hit', 'data-gid': String(hit.gid) },
        el('span', { class: 'hit-head' }, `${i + 1}. ${hit.preferred} (gid ${hit.gid}, sense ${hit.wsr})`),
        el('span', { class: 'hit-gloss' }, hit.gloss),
      );
      button.disabled = this.pending;
      button.addEventListener('click', () => this.decide({ action: 'accept', gid: hit.gid }));
      hits.append(el('li', {}, button));
    });
    if (view.hits.length === 0) {
      hits.append(el('li', { class: 'no-hits' }, 'no synonymous match in the core'));
    }

    const openNew = el('button', { id: 'open-new', type: 'button' }, 'New concept (N)');
    openNew.disabled = this.pending || this.formOpen;
    openNew.addEventListener('click', () => this.openForm());
    const skip = el('button', { id: 'skip', type: 'button' }, 'Skip (S)');
    skip.disabled = this.pending;
    skip.addEventListener('click', () => this.decide({ action: 'skip' }));
    const actions = el('div', { id: 'actions' }, openNew, skip);

    const section = el('section', {}, card, hits, actions);
    if (this.formOpen) section.append(this.renderForm(candidate.parent_label));
    section.append(
      el('p', { class: 'keys' }, '1-9 accept a hit, N new concept, S skip'),
    );
    return section;
  }

  private renderForm(parentLabel: string): HTMLElement {
    const textarea = el('textarea', { id: 'gloss-input', rows: '3' }) as HTMLTextAreaElement;
    textarea.value = this.glossDraft;
    const hint = el('div', { id: 'genus-hint', class: 'hint' });
    const updateHint = () => {
      const warning = genusHint(textarea.value, parentLabel);
      hint.textContent = warning ?? '';
      hint.classList.toggle('active', warning !== null);
    };
    textarea.addEventListener('input', () => {
      this.glossDraft = textarea.value;
      updateHint();
    });
    updateHint();

    const submit = el('button', { id: 'submit-new', type: 'submit' }, 'Commit new concept');
    submit.disabled = this.pending;
    const cancel = el('button', { id: 'cancel-new', type: 'button' }, 'Cancel');
    cancel.addEventListener('click', () => {
      this.formOpen = false;
      this.glossDraft = '';
      this.render();
    });

    const form = el(
      'form',
      { id: 'new-form' },
      el('label', { for: 'gloss-input' }, 'Gloss for the new concept'),
      textarea,
      hint,
      el('div', { class: 'form-actions' }, submit, cancel),
    );
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      this.decide({ action: 'new', gloss: textarea.value });
    });
    queueMicrotask(() => textarea.focus());
    return form;
  }

  private renderReview(): HTMLElement {
    const section = el('section', { id: 'review' }, el('h2', {}, 'Review draft sheet'));
    if (this.sheetText === null) {
      section.append(el('p', {}, 'loading sheet...'));
      return section;
    }
    const sheet = parseSheet(this.sheetText);
    const metaList = el('dl', { class: 'sheet-meta' });
    for (const [key, value] of Object.entries(sheet.meta)) {
      metaList.append(el('dt', {}, key), el('dd', {}, value));
    }
    const head = el('tr', {});
    for (const column of sheet.header) head.append(el('th', {}, column));
    const table = el('table', { id: 'sheet-table' }, el('thead', {}, head));
    const body = el('tbody', {});
    for (const row of sheet.rows) {
      const tr = el('tr', {});
      for (const cell of row) tr.append(el('td', {}, cell));
      body.append(tr);
    }
    table.append(body);

    const finalize = el('button', { id: 'finalize', type: 'button' }, 'Finalize and commit');
    finalize.disabled = this.pending || this.violations.length > 0;
    finalize.addEventListener('click', () => this.runFinalize());

    section.append(metaList, el('div', { class: 'table-wrap' }, table));
    if (this.violations.length > 0) {
      const list = el('ul', { id: 'violations' });
      for (const v of this.violations) {
        list.append(el('li', { class: v.severity }, `[${v.severity}] ${v.code} row ${v.row}: ${v.message}`));
      }
      section.append(
        el('p', { class: 'blocked' }, 'validation failed; the sheet cannot be committed as-is'),
        list,
      );
    }
    section.append(finalize);
    return section;
  }

  private renderMapping(mapping: Record<string, number>): HTMLElement {
    const table = el(
      'table',
      { id: 'mapping' },
      el('thead', {}, el('tr', {}, el('th', {}, 'placeholder'), el('th', {}, 'gid'))),
    );
    const body = el('tbody', {});
    const entries = Object.entries(mapping).sort((a, b) => Number(b[0]) - Number(a[0]));
    for (const [placeholder, gid] of entries) {
      body.append(el('tr', {}, el('td', {}, placeholder), el('td', {}, String(gid))));
    }
    table.append(body);
    return el(
      'section',
      { id: 'done' },
      el('h2', {}, 'Session committed'),
      el('p', {}, 'new concepts received these identifiers:'),
      table,
    );
  }
}
