/** Wires the workbench together: editor, run controls with 1s polling,
 * graph panel, digest and repair dialogs, and the model settings form. */

import { ApiClient, ApiError } from './api.js';
import { DigestPanel } from './digestPanel.js';
import { SpecEditor, contentHash } from './editor.js';
import { GraphPanel } from './graphPanel.js';
import { poll } from './poll.js';
import { RepairPanel } from './repairPanel.js';
import { showToast } from './toast.js';
import type { RunDoc } from './types.js';

/** Fetch the definition span for an edge's action and move the editor
 * there; unresolved actions surface as an info toast and nothing scrolls. */
export async function edgeClickToCode(
  api: ApiClient, session: string, editor: SpecEditor, action: string,
): Promise<void> {
  try {
    editor.highlightSpan(await api.sourceLocation(session, action));
  } catch (error) {
    if (error instanceof ApiError && error.status === 404) {
      showToast(`no source location for "${action}"`, 'info');
      return;
    }
    showToast(String(error), 'error');
  }
}

export class App {
  readonly api: ApiClient;
  readonly editor: SpecEditor;
  readonly cfgEditor: HTMLTextAreaElement;
  readonly graph: GraphPanel;
  readonly digest: DigestPanel;
  readonly repair: RepairPanel;
  sessionId = '';
  activeRun: number | null = null;

  constructor(private root: HTMLElement, api?: ApiClient) {
    this.api = api ?? new ApiClient();
    this.editor = new SpecEditor(this.part('editor'));
    this.cfgEditor = document.createElement('textarea');
    this.cfgEditor.className = 'cfg-editor';
    this.part('cfg').appendChild(this.cfgEditor);
    this.graph = new GraphPanel(this.api, {
      canvas: this.part('canvas'),
      treeIndex: this.part('trees'),
      detail: this.part('detail'),
    }, () => this.sessionId, () => this.activeRun);
    this.graph.onEdgeClick = action =>
      void edgeClickToCode(this.api, this.sessionId, this.editor, action);
    this.digest = new DigestPanel(this.api, this.part('digest'),
      () => this.sessionId);
    this.repair = new RepairPanel(this.api, {
      history: this.part('repair-history'),
      proposal: this.part('repair-proposal'),
      status: this.part('repair-status'),
    }, () => this.sessionId, () => this.editor.value);
    this.repair.onAccepted = () => this.reloadSpecFromServer();
  }

  private part(name: string): HTMLElement {
    let node = this.root.querySelector<HTMLElement>(`[data-part="${name}"]`);
    if (!node) {
      node = document.createElement('div');
      node.dataset.part = name;
      this.root.appendChild(node);
    }
    return node;
  }

  async init(): Promise<void> {
    this.sessionId = (await this.api.createSession()).id;
  }

  async saveSpec(): Promise<void> {
    await this.api.putSpec(this.sessionId, this.editor.value, this.cfgEditor.value);
    await this.assertBufferInSync();
  }

  /** The editor buffer must hash-match the server copy after every save or
   * accept round-trip. */
  async assertBufferInSync(): Promise<void> {
    const server = await this.api.getSpec(this.sessionId);
    if (contentHash(server.spec) !== contentHash(this.editor.value)) {
      showToast('editor buffer diverged from the server copy; reloading', 'error');
      this.editor.value = server.spec;
      this.cfgEditor.value = server.cfg;
    }
  }

  async reloadSpecFromServer(): Promise<void> {
    const server = await this.api.getSpec(this.sessionId);
    this.editor.value = server.spec;
    this.cfgEditor.value = server.cfg;
  }

  /** Save, start a check, and poll at 1s until it settles; on completion
   * the graph panel fetches the first view. */
  async runCheck(): Promise<RunDoc | null> {
    await this.saveSpec();
    let outcome: RunDoc | null = null;
    try {
      const { run_id } = await this.api.startCheck(this.sessionId);
      this.activeRun = run_id;
      const badge = this.part('run-badge');
      badge.dataset.state = 'running';
      badge.textContent = `run ${run_id}: running`;
      const poller = poll(
        () => this.api.getRun(this.sessionId, run_id),
        doc => {
          badge.textContent = `run ${run_id}: ${doc.status}`;
          if (doc.status === 'queued' || doc.status === 'running') return false;
          outcome = doc;
          badge.dataset.state =
            doc.status === 'done' && doc.result?.error == null ? 'clean'
              : doc.status === 'done' ? 'violation' : doc.status;
          return true;
        });
      await poller.done;
      if (outcome && (outcome as RunDoc).status === 'done') {
        await this.graph.refresh();
      }
    } catch (error) {
      showToast(String(error), 'error');
    }
    return outcome;
  }

  async loadLlmSettings(): Promise<Record<string, unknown>> {
    return this.api.getLlmSettings(this.sessionId);
  }

  async saveLlmSettings(settings: Record<string, unknown>): Promise<boolean> {
    try {
      await this.api.putLlmSettings(this.sessionId, settings);
      showToast('model settings saved', 'info');
      return true;
    } catch (error) {
      showToast(String(error), 'error');
      return false;
    }
  }
}

function promptLlmSettings(app: App): void {
  void app.loadLlmSettings().then(current => {
    const provider = window.prompt(
      'provider (openai_compatible | anthropic_compatible | mock)',
      String(current.provider ?? 'openai_compatible'));
    if (provider === null) return;
    const model = window.prompt('model name', String(current.model_name ?? ''));
    if (model === null) return;
    const base = window.prompt('base URL', String(current.base_url ?? ''));
    if (base === null) return;
    void app.saveLlmSettings({
      provider, model_name: model, base_url: base,
    });
  });
}

export function bootstrap(): App {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app container');
  const app = new App(root);
  void app.init();

  const on = (id: string, handler: () => void) =>
    document.getElementById(id)?.addEventListener('click', handler);
  on('run-button', () => void app.runCheck());
  on('digest-button', () =>
    void app.digest.run(app.editor.selectedLines()));
  on('repair-single-button', () => void app.repair.startSingle());
  on('repair-multi-button', () => void app.repair.startMulti(5));
  on('llm-settings-button', () => promptLlmSettings(app));

  (window as unknown as { workbench: App }).workbench = app;
  return app;
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  bootstrap();
}
