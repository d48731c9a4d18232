/** Plain-textarea spec editor with line numbers and span highlighting.
 * Highlighting marks whole lines of a definition span; precise columns are
 * available in the location document when finer granularity matters. */

import type { SourceLocationDoc } from './types.js';

export class SpecEditor {
  readonly textarea: HTMLTextAreaElement;
  private gutter: HTMLElement;
  private highlight: { start: number; end: number } | null = null;

  constructor(private root: HTMLElement) {
    this.root.classList.add('spec-editor');
    this.gutter = document.createElement('div');
    this.gutter.className = 'gutter';
    this.textarea = document.createElement('textarea');
    this.textarea.spellcheck = false;
    this.textarea.addEventListener('input', () => this.renderGutter());
    this.root.append(this.gutter, this.textarea);
    this.renderGutter();
  }

  get value(): string {
    return this.textarea.value;
  }

  set value(text: string) {
    this.textarea.value = text;
    this.renderGutter();
  }

  get highlightedSpan(): { start: number; end: number } | null {
    return this.highlight;
  }

  /** Scroll to and mark the span; repeated calls with the same span are
   * idempotent. */
  highlightSpan(location: SourceLocationDoc): void {
    this.highlight = { start: location.start_line, end: location.end_line };
    this.renderGutter();
    const lines = this.value.split('\n');
    const before = lines.slice(0, location.start_line - 1)
      .reduce((n, line) => n + line.length + 1, 0);
    const upto = lines.slice(0, location.end_line)
      .reduce((n, line) => n + line.length + 1, 0) - 1;
    this.textarea.focus();
    this.textarea.setSelectionRange(before, Math.max(before, upto));
    const lineHeight = 18;
    this.textarea.scrollTop = Math.max(0, (location.start_line - 3) * lineHeight);
  }

  clearHighlight(): void {
    this.highlight = null;
    this.renderGutter();
  }

  /** 1-based line range of the current selection, for digest focus. */
  selectedLines(): [number, number] | null {
    const { selectionStart, selectionEnd } = this.textarea;
    if (selectionStart === selectionEnd) return null;
    const upTo = (offset: number) =>
      this.value.slice(0, offset).split('\n').length;
    return [upTo(selectionStart), upTo(Math.max(selectionStart, selectionEnd - 1))];
  }

  private renderGutter(): void {
    const count = this.value === '' ? 1 : this.value.split('\n').length;
    this.gutter.textContent = '';
    for (let i = 1; i <= count; i++) {
      const line = document.createElement('span');
      line.className = 'gutter-line';
      line.dataset.line = String(i);
      if (this.highlight && i >= this.highlight.start && i <= this.highlight.end) {
        line.classList.add('highlighted');
      }
      line.textContent = String(i);
      this.gutter.appendChild(line);
    }
  }
}

/** Stable content hash used to verify the buffer matches the server copy
 * after save/accept round-trips (FNV-1a, hex). */
export function contentHash(text: string): string {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash.toString(16).padStart(8, '0');
}
