import type { NetworkDescription } from './types.js';

export interface NodePosition {
  id: string;
  x: number;
  y: number;
  layer: number;
}

/** Left-to-right DAG layout: sources in the first column, each node one
 * column past its deepest predecessor, nodes in a column spread vertically. */
export const layoutNetwork = (
  network: NetworkDescription,
  width = 640,
  height = 360,
  margin = 60,
): Map<string, NodePosition> => {
  const layer = new Map<string, number>();
  for (const node of network.nodes) layer.set(node.id, 0);
  // longest-path layering; the graphs are small, so iterate to fixpoint
  let changed = true;
  while (changed) {
    changed = false;
    for (const edge of network.edges) {
      const src = layer.get(edge.from) ?? 0;
      const dst = layer.get(edge.to) ?? 0;
      if (dst < src + 1) {
        layer.set(edge.to, src + 1);
        changed = true;
      }
    }
  }
  const maxLayer = Math.max(0, ...layer.values());
  const byLayer = new Map<number, string[]>();
  for (const node of network.nodes) {
    const l = layer.get(node.id) ?? 0;
    const bucket = byLayer.get(l) ?? [];
    bucket.push(node.id);
    byLayer.set(l, bucket);
  }
  const out = new Map<string, NodePosition>();
  for (const [l, ids] of byLayer) {
    ids.sort();
    ids.forEach((id, i) => {
      const x = margin + (width - 2 * margin) * (maxLayer === 0 ? 0.5 : l / maxLayer);
      const y = margin + (height - 2 * margin) * ((i + 1) / (ids.length + 1));
      out.set(id, { id, x, y, layer: l });
    });
  }
  return out;
};
