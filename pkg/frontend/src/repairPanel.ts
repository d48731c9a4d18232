/** Repair dialog: single-pass shows a reviewable proposal with accept /
 * reject; multi-pass streams attempt entries into the history panel by
 * polling until the loop reports its final status. */

import type { ApiClient } from './api.js';
import { poll, type Poller } from './poll.js';
import { showToast } from './toast.js';
import type { RepairAttemptDoc, RepairDoc } from './types.js';

export interface RepairElements {
  history: HTMLElement;
  proposal: HTMLElement;
  status: HTMLElement;
}

function describeAttempt(attempt: RepairAttemptDoc): string {
  const outcome = attempt.patch_status !== 'applied'
    ? attempt.patch_status.replace('_', ' ')
    : attempt.verdict.replace('_', ' ');
  return `attempt ${attempt.index}: ${outcome}`;
}

/** Minimal line diff for the proposal view: pairs of changed lines. */
export function changedLines(before: string, after: string): Array<[string, string]> {
  const a = before.split('\n');
  const b = after.split('\n');
  const out: Array<[string, string]> = [];
  for (let i = 0; i < Math.max(a.length, b.length); i++) {
    if ((a[i] ?? '') !== (b[i] ?? '')) out.push([a[i] ?? '', b[i] ?? '']);
  }
  return out;
}

export class RepairPanel {
  current: RepairDoc | null = null;
  repairId: number | null = null;
  private poller: Poller | null = null;

  /** Called after an accepted patch lands server-side so the editor can
   * re-sync its buffer from the server copy. */
  onAccepted: () => void | Promise<void> = () => {};

  constructor(
    private api: ApiClient,
    private elements: RepairElements,
    private session: () => string,
    private specProvider: () => string,
    private pollIntervalMs = 1000,
  ) {}

  async startSingle(): Promise<void> {
    try {
      const { repair_id } = await this.api.startRepair(this.session(), 'single');
      this.repairId = repair_id;
      this.render(await this.api.getRepair(this.session(), repair_id));
    } catch (error) {
      showToast(String(error), 'error');
    }
  }

  async startMulti(maxPasses: number): Promise<void> {
    try {
      const { repair_id } = await this.api.startRepair(this.session(), 'multi', maxPasses);
      this.repairId = repair_id;
      this.poller = poll(
        () => this.api.getRepair(this.session(), repair_id),
        doc => {
          this.render(doc);
          return doc.final_status !== null && doc.final_status !== undefined;
        },
        this.pollIntervalMs);
      await this.poller.done;
    } catch (error) {
      showToast(String(error), 'error');
    }
  }

  async accept(): Promise<void> {
    if (this.repairId === null) return;
    try {
      await this.api.acceptRepair(this.session(), this.repairId);
      await this.onAccepted();
      this.elements.proposal.textContent = '';
      showToast('repair accepted; re-check to confirm', 'info');
    } catch (error) {
      showToast(String(error), 'error');
    }
  }

  reject(): void {
    // The proposal stays archived in the repair history server-side; the
    // editor buffer was never touched.
    this.elements.proposal.textContent = '';
    showToast('proposal rejected; spec unchanged', 'info');
  }

  async cancel(): Promise<void> {
    if (this.repairId === null) return;
    this.poller?.stop();
    await this.api.cancelRepair(this.session(), this.repairId);
  }

  render(doc: RepairDoc): void {
    this.current = doc;
    const { history, proposal, status } = this.elements;

    status.textContent = doc.final_status
      ? `status: ${doc.final_status.replace('_', ' ')}` +
        (doc.abort_reason ? ` (${doc.abort_reason})` : '')
      : 'status: running';

    history.textContent = '';
    const list = document.createElement('ol');
    list.className = 'repair-history';
    for (const attempt of doc.attempts) {
      const item = document.createElement('li');
      item.dataset.attemptIndex = String(attempt.index);
      item.dataset.verdict = attempt.verdict;
      item.textContent = describeAttempt(attempt);
      list.appendChild(item);
    }
    history.appendChild(list);

    proposal.textContent = '';
    const reviewable = doc.mode === 'single_pass' && !doc.accepted
      ? doc.attempts.filter(a => a.patched_spec !== null).at(-1)
      : undefined;
    if (reviewable?.patched_spec) {
      const table = document.createElement('table');
      table.className = 'proposal-diff';
      for (const [before, after] of changedLines(this.specProvider(),
                                                 reviewable.patched_spec)) {
        const row = document.createElement('tr');
        const removed = document.createElement('td');
        removed.className = 'diff-before';
        removed.textContent = before;
        const added = document.createElement('td');
        added.className = 'diff-after';
        added.textContent = after;
        row.append(removed, added);
        table.appendChild(row);
      }
      proposal.appendChild(table);
      const acceptButton = document.createElement('button');
      acceptButton.className = 'accept-proposal';
      acceptButton.textContent = 'accept';
      acceptButton.addEventListener('click', () => void this.accept());
      const rejectButton = document.createElement('button');
      rejectButton.className = 'reject-proposal';
      rejectButton.textContent = 'reject';
      rejectButton.addEventListener('click', () => this.reject());
      proposal.append(acceptButton, rejectButton);
    }
  }
}
