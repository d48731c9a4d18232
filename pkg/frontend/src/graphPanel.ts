/** Controller for the graph canvas, the tree toggle panel, and the node
 * detail pane. Every DOM update is driven by exactly one graph-view
 * response; the panel keeps that response for inspection so tests (and
 * debugging) can verify the lazy contract end to end. */

import type { ApiClient } from './api.js';
import { renderGraphView, renderNodeDetail, renderTreeIndex } from './graphView.js';
import { showToast } from './toast.js';
import type { GraphViewDoc, ViewNode } from './types.js';

export interface GraphPanelElements {
  canvas: HTMLElement;
  treeIndex: HTMLElement;
  detail: HTMLElement;
}

export class GraphPanel {
  lastResponse: GraphViewDoc | null = null;
  selected: ViewNode | null = null;
  onEdgeClick: (action: string) => void = () => {};

  constructor(
    private api: ApiClient,
    private elements: GraphPanelElements,
    private session: () => string,
    private run: () => number | null,
  ) {}

  async refresh(tree?: number, depth?: number): Promise<void> {
    const rid = this.run();
    if (rid === null) return;
    try {
      this.render(await this.api.getGraphView(this.session(), rid, tree, depth));
    } catch (error) {
      showToast(String(error), 'error');
    }
  }

  async toggleFold(node: ViewNode, folded: boolean): Promise<void> {
    const rid = this.run();
    if (rid === null) return;
    try {
      this.render(await this.api.postFold(this.session(), rid, node.id, folded));
    } catch (error) {
      showToast(String(error), 'error');
    }
  }

  /** Render one response; the sole path that touches the canvas DOM. */
  render(doc: GraphViewDoc): void {
    this.lastResponse = doc;
    if (this.selected && !doc.nodes.some(n => n.id === this.selected!.id)) {
      this.selected = null;
    }
    renderGraphView(this.elements.canvas, doc, {
      onSelectNode: node => {
        this.selected = node;
        renderNodeDetail(this.elements.detail, node);
      },
      onToggleFold: (node, folded) => void this.toggleFold(node, folded),
      onEdgeClick: action => this.onEdgeClick(action),
      onToggleTree: index => void this.refresh(index),
    });
    renderTreeIndex(this.elements.treeIndex, doc.trees, doc.tree,
      index => void this.refresh(index));
    renderNodeDetail(this.elements.detail, this.selected);
  }

  renderedNodeIds(): string[] {
    return Array.from(
      this.elements.canvas.querySelectorAll<SVGGElement>('[data-node-id]'),
      element => element.getAttribute('data-node-id')!);
  }
}
