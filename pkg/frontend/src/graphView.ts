import type { GraphViewDoc, TreeIndexEntry, ViewNode } from './types.js';

export const ALERT_COLOR = '#d62839';
export const NODE_COLOR = '#f0f4f8';
export const INITIAL_COLOR = '#dcebff';
export const TERMINAL_COLOR = '#e6f4e6';

const SVG_NS = 'http://www.w3.org/2000/svg';
const NODE_W = 190;
const NODE_H = 46;
const GAP_X = 70;
const GAP_Y = 18;

export interface GraphHandlers {
  onSelectNode?: (node: ViewNode) => void;
  onToggleFold?: (node: ViewNode, folded: boolean) => void;
  onEdgeClick?: (action: string) => void;
  onToggleTree?: (index: number) => void;
}

function nodeLabel(node: ViewNode): string {
  return Object.entries(node.vars).map(([k, v]) => `${k} = ${v}`).join(' /\\ ');
}

/** Layered layout straight from the server-provided depth ranks; the client
 * adds coordinates only, never structure. */
function positions(nodes: ViewNode[]): Map<string, { x: number; y: number }> {
  const byDepth = new Map<number, ViewNode[]>();
  for (const node of nodes) {
    const bucket = byDepth.get(node.depth) ?? [];
    bucket.push(node);
    byDepth.set(node.depth, bucket);
  }
  const out = new Map<string, { x: number; y: number }>();
  for (const [depth, bucket] of byDepth) {
    bucket.sort((a, b) => a.rank - b.rank);
    bucket.forEach((node, i) => {
      out.set(node.id, {
        x: 20 + depth * (NODE_W + GAP_X),
        y: 20 + i * (NODE_H + GAP_Y),
      });
    });
  }
  return out;
}

function el<K extends keyof SVGElementTagNameMap>(
  tag: K, attrs: Record<string, string>): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

/** Render one graph-view response into the container. Every element carries
 * the id/action it came from, so the DOM never shows anything the last
 * response did not contain. */
export function renderGraphView(
  container: HTMLElement, doc: GraphViewDoc, handlers: GraphHandlers = {}): void {
  container.textContent = '';
  const pos = positions(doc.nodes);
  const width = 40 + (1 + Math.max(0, ...doc.nodes.map(n => n.depth))) * (NODE_W + GAP_X);
  const perDepth = new Map<number, number>();
  for (const node of doc.nodes) {
    perDepth.set(node.depth, (perDepth.get(node.depth) ?? 0) + 1);
  }
  const height = 60 + Math.max(1, ...perDepth.values()) * (NODE_H + GAP_Y);

  const svg = el('svg', {
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    class: 'graph-canvas',
  });

  for (const edge of doc.edges) {
    const a = pos.get(edge.from);
    const b = pos.get(edge.to);
    if (!a || !b) continue; // closure guaranteed server-side; belt and braces
    const group = el('g', { class: 'edge', 'data-edge-action': edge.action });
    const x1 = a.x + NODE_W;
    const y1 = a.y + NODE_H / 2;
    const x2 = b.x;
    const y2 = b.y + NODE_H / 2;
    group.appendChild(el('line', {
      x1: String(x1), y1: String(y1), x2: String(x2), y2: String(y2),
      stroke: '#7a8699', 'stroke-width': '1.4', 'marker-end': 'url(#arrow)',
    }));
    const label = el('text', {
      x: String((x1 + x2) / 2), y: String((y1 + y2) / 2 - 5),
      class: 'edge-label', 'text-anchor': 'middle', 'font-size': '11',
    });
    label.textContent = edge.action;
    group.appendChild(label);
    group.addEventListener('click', () => handlers.onEdgeClick?.(edge.action));
    svg.appendChild(group);
  }

  const defs = el('defs', {});
  const marker = el('marker', {
    id: 'arrow', viewBox: '0 0 10 10', refX: '9', refY: '5',
    markerWidth: '7', markerHeight: '7', orient: 'auto-start-reverse',
  });
  marker.appendChild(el('path', { d: 'M 0 0 L 10 5 L 0 10 z', fill: '#7a8699' }));
  defs.appendChild(marker);
  svg.appendChild(defs);

  for (const node of doc.nodes) {
    const p = pos.get(node.id)!;
    const classes = ['node'];
    if (node.violating) classes.push('violating');
    if (node.folded) classes.push('folded');
    const group = el('g', {
      class: classes.join(' '),
      'data-node-id': node.id,
      transform: `translate(${p.x},${p.y})`,
    });
    const fill = node.violating ? ALERT_COLOR
      : node.initial ? INITIAL_COLOR
        : node.terminal ? TERMINAL_COLOR
          : NODE_COLOR;
    group.appendChild(el('rect', {
      width: String(NODE_W), height: String(NODE_H), rx: '8',
      fill, stroke: node.violating ? '#8f1425' : '#5b6b82',
      'stroke-width': node.violating ? '2.5' : '1.2',
    }));
    const text = el('text', {
      x: '10', y: '27', 'font-size': '12',
      fill: node.violating ? '#ffffff' : '#1c2733',
    });
    text.textContent = nodeLabel(node);
    group.appendChild(text);
    const title = document.createElementNS(SVG_NS, 'title');
    title.textContent = node.violating
      ? `violates: ${node.violated.join(', ')}`
      : nodeLabel(node);
    group.appendChild(title);

    if (node.hidden > 0 || node.folded) {
      const badge = el('g', {
        class: 'fold-badge',
        'data-badge-for': node.id,
        transform: `translate(${NODE_W - 14},-8)`,
      });
      badge.appendChild(el('circle', { r: '12', fill: '#3d5a80' }));
      const count = el('text', {
        'text-anchor': 'middle', y: '4', 'font-size': '11', fill: '#ffffff',
      });
      count.textContent = `+${node.hidden}`;
      badge.appendChild(count);
      badge.addEventListener('click', event => {
        event.stopPropagation();
        handlers.onToggleFold?.(node, !node.folded);
      });
      group.appendChild(badge);
    }
    if (node.stubs > 0) {
      const stub = el('text', {
        x: String(NODE_W - 8), y: String(NODE_H - 6),
        'text-anchor': 'end', 'font-size': '10', fill: '#5b6b82',
        class: 'stub-count',
      });
      stub.textContent = `⇢${node.stubs}`;
      group.appendChild(stub);
    }
    group.addEventListener('click', () => handlers.onSelectNode?.(node));
    svg.appendChild(group);
  }

  container.appendChild(svg);
  if (doc.truncated) {
    const notice = document.createElement('div');
    notice.className = 'truncation-notice';
    notice.textContent = 'view truncated to the payload bound; unfold less or lower the depth';
    container.appendChild(notice);
  }
}

/** Right-hand toggle panel listing every tree; only the active one is
 * materialized on the canvas. */
export function renderTreeIndex(
  container: HTMLElement, trees: TreeIndexEntry[], active: number,
  onToggle: (index: number) => void): void {
  container.textContent = '';
  const list = document.createElement('ul');
  list.className = 'tree-index';
  for (const tree of trees) {
    const item = document.createElement('li');
    item.dataset.treeIndex = String(tree.index);
    if (tree.index === active) item.classList.add('active');
    const button = document.createElement('button');
    button.textContent = `tree ${tree.index} · ${Object.entries(tree.vars)
      .map(([k, v]) => `${k} = ${v}`).join(', ')} · ${tree.size} states`;
    button.addEventListener('click', () => onToggle(tree.index));
    item.appendChild(button);
    list.appendChild(item);
  }
  container.appendChild(list);
}

/** Detail panel for the selected node: bindings plus any violated
 * properties, which must be visible on selection. */
export function renderNodeDetail(container: HTMLElement, node: ViewNode | null): void {
  container.textContent = '';
  if (!node) return;
  const dl = document.createElement('dl');
  dl.className = 'node-detail';
  for (const [key, value] of Object.entries(node.vars)) {
    const dt = document.createElement('dt');
    dt.textContent = key;
    const dd = document.createElement('dd');
    dd.textContent = value;
    dl.append(dt, dd);
  }
  container.appendChild(dl);
  if (node.violated.length > 0) {
    const warn = document.createElement('p');
    warn.className = 'violated-properties';
    warn.textContent = `violates: ${node.violated.join(', ')}`;
    container.appendChild(warn);
  }
}
