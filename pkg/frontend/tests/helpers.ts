import type { ApiClient } from '../src/api.js';
import type { GraphViewDoc } from '../src/types.js';

import viewFullJson from './fixtures/view-full.json';
import viewFoldedJson from './fixtures/view-root-folded.json';
import viewBuggyJson from './fixtures/view-buggy.json';

export const viewFull = viewFullJson as unknown as GraphViewDoc;
export const viewRootFolded = viewFoldedJson as unknown as GraphViewDoc;
export const viewBuggy = viewBuggyJson as unknown as GraphViewDoc;

/** Build a partial ApiClient double; tests provide only what they exercise. */
export function fakeApi(overrides: Partial<Record<keyof ApiClient, unknown>>): ApiClient {
  const throwing = (name: string) => () => {
    throw new Error(`unexpected api call: ${name}`);
  };
  const stub: Record<string, unknown> = {};
  const methods = [
    'createSession', 'putSpec', 'getSpec', 'getLlmSettings', 'putLlmSettings',
    'startCheck', 'getRun', 'cancelRun', 'getGraphView', 'postFold',
    'getSummary', 'startDigest', 'getDigest', 'startRepair', 'getRepair',
    'acceptRepair', 'cancelRepair', 'sourceLocation',
  ];
  for (const name of methods) stub[name] = throwing(name);
  Object.assign(stub, overrides);
  return stub as unknown as ApiClient;
}

export function div(): HTMLElement {
  const node = document.createElement('div');
  document.body.appendChild(node);
  return node;
}
