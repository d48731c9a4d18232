import { beforeEach, describe, expect, it } from 'vitest';

import { RepairPanel, changedLines } from '../src/repairPanel.js';
import type { RepairDoc } from '../src/types.js';
import { div, fakeApi } from './helpers.js';

import proposalJson from './fixtures/repair-proposal.json';

const proposal = proposalJson as unknown as RepairDoc;
const buggySpec = proposal.attempts[0].patched_spec!
  .replace('!.white = @ - 2]', '!.white = @ - 1]');

beforeEach(() => {
  document.body.innerHTML = '';
});

function makePanel(api = fakeApi({}), spec = buggySpec, intervalMs = 5) {
  const elements = { history: div(), proposal: div(), status: div() };
  const panel = new RepairPanel(api, elements, () => 'sid', () => spec, intervalMs);
  return { panel, elements };
}

describe('single-pass proposal', () => {
  it('shows the one-line diff with accept and reject controls', async () => {
    const api = fakeApi({
      startRepair: async () => ({ repair_id: 1 }),
      getRepair: async () => proposal,
    });
    const { panel, elements } = makePanel(api);
    await panel.startSingle();

    const rows = elements.proposal.querySelectorAll('.proposal-diff tr');
    expect(rows.length).toBe(1);
    expect(rows[0].querySelector('.diff-before')!.textContent)
      .toContain('!.white = @ - 1');
    expect(rows[0].querySelector('.diff-after')!.textContent)
      .toContain('!.white = @ - 2');
    expect(elements.proposal.querySelector('.accept-proposal')).not.toBeNull();
    expect(elements.proposal.querySelector('.reject-proposal')).not.toBeNull();
    expect(elements.history.querySelectorAll('li').length).toBe(1);
  });

  it('accept applies server-side and re-syncs the editor', async () => {
    const accepted: number[] = [];
    const api = fakeApi({
      startRepair: async () => ({ repair_id: 7 }),
      getRepair: async () => proposal,
      acceptRepair: async (_sid: string, n: number) => { accepted.push(n); },
    });
    const { panel } = makePanel(api);
    let resynced = false;
    panel.onAccepted = () => { resynced = true; };
    await panel.startSingle();
    await panel.accept();
    expect(accepted).toEqual([7]);
    expect(resynced).toBe(true);
  });

  it('reject leaves the spec untouched and archives the proposal', async () => {
    const api = fakeApi({
      startRepair: async () => ({ repair_id: 1 }),
      getRepair: async () => proposal,
    });
    let specTouched = false;
    const { panel, elements } = makePanel(api);
    panel.onAccepted = () => { specTouched = true; };
    await panel.startSingle();
    panel.reject();
    expect(specTouched).toBe(false);
    expect(elements.proposal.textContent).toBe('');
    expect(panel.current!.attempts.length).toBe(1); // still recorded
  });
});

describe('multi-pass history polling', () => {
  it('streams attempts and ends with the final status', async () => {
    const attempt = (index: number, verdict: string) => ({
      ...proposal.attempts[0], index, verdict,
    });
    const sequence: RepairDoc[] = [
      { mode: 'multi_pass', final_status: null, attempts: [attempt(1, 'still_failing')] },
      { mode: 'multi_pass', final_status: null,
        attempts: [attempt(1, 'still_failing'), attempt(2, 'still_failing')] },
      { mode: 'multi_pass', final_status: 'limit_reached',
        attempts: [attempt(1, 'still_failing'), attempt(2, 'still_failing'),
                   attempt(3, 'still_failing')] },
    ];
    let call = 0;
    const api = fakeApi({
      startRepair: async () => ({ repair_id: 2 }),
      getRepair: async () => sequence[Math.min(call++, sequence.length - 1)],
    });
    const { panel, elements } = makePanel(api);
    await panel.startMulti(3);

    const entries = elements.history.querySelectorAll('li');
    expect(entries.length).toBe(3);
    expect(entries[2].dataset.attemptIndex).toBe('3');
    expect(elements.status.textContent).toContain('limit reached');
    // Multi-pass renders history only, no inline proposal diff.
    expect(elements.proposal.querySelector('.proposal-diff')).toBeNull();
  });

  it('renders the recorded error for aborted sessions', async () => {
    const api = fakeApi({
      startRepair: async () => ({ repair_id: 3 }),
      getRepair: async () => ({
        mode: 'multi_pass', final_status: 'aborted',
        abort_reason: 'llm failed: credentials missing', attempts: [],
      } as RepairDoc),
    });
    const { panel, elements } = makePanel(api);
    await panel.startMulti(3);
    expect(elements.status.textContent).toContain('aborted');
    expect(elements.status.textContent).toContain('credentials missing');
  });
});

describe('diff helper', () => {
  it('reports exactly the changed line pairs', () => {
    expect(changedLines('a\nb\nc', 'a\nB\nc')).toEqual([['b', 'B']]);
    expect(changedLines('same', 'same')).toEqual([]);
  });
});
