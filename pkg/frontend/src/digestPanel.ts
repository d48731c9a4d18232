/** Digest dialog: request an explanation of the whole model or of the
 * highlighted segment, then render the sectioned report. */

import type { ApiClient } from './api.js';
import { showToast } from './toast.js';
import type { DigestDoc } from './types.js';

const SECTION_ORDER = ['overview', 'variables', 'constants', 'actions',
  'transitions', 'invariants'] as const;

export class DigestPanel {
  current: DigestDoc | null = null;

  constructor(
    private api: ApiClient,
    private container: HTMLElement,
    private session: () => string,
  ) {}

  async run(selection: [number, number] | null): Promise<void> {
    try {
      const { digest_id } = await this.api.startDigest(
        this.session(), selection ?? undefined);
      this.render(await this.api.getDigest(this.session(), digest_id));
    } catch (error) {
      showToast(String(error), 'error');
    }
  }

  render(doc: DigestDoc): void {
    this.current = doc;
    const root = this.container;
    root.textContent = '';

    const meta = document.createElement('p');
    meta.className = 'digest-meta';
    meta.textContent = `model: ${doc.model} · nodes: ${doc.summary.nodes} · ` +
      `edges: ${doc.summary.edges}`;
    root.appendChild(meta);

    const boundary = document.createElement('dl');
    boundary.className = 'digest-boundary';
    for (const [label, states] of [['initial', doc.summary.initial],
                                   ['terminal', doc.summary.terminal]] as const) {
      const dt = document.createElement('dt');
      dt.textContent = label;
      boundary.appendChild(dt);
      for (const state of states) {
        const dd = document.createElement('dd');
        dd.textContent = state;
        boundary.appendChild(dd);
      }
    }
    root.appendChild(boundary);

    if (doc.selection_echo) {
      const echo = document.createElement('pre');
      echo.className = 'selection-echo';
      echo.textContent = doc.selection_echo;
      root.appendChild(echo);
    }

    for (const name of SECTION_ORDER) {
      const heading = document.createElement('h3');
      heading.textContent = name;
      heading.dataset.section = name;
      const body = document.createElement('p');
      body.textContent = doc.explanation[name] ?? '';
      root.append(heading, body);
    }
  }
}
