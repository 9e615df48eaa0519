import type { ComparisonGraph, ComparisonNode, CompareMode } from './api.js';

const SVG_NS = 'http://www.w3.org/2000/svg';
const MODES: CompareMode[] = ['conference', 'product', 'intersection', 'all'];
const FILL: Record<ComparisonNode['membership'], string> = {
  conference_only: '#4c78c8',
  product_only: '#e08a3c',
  both: '#4ca64c',
};

export interface GraphPanelOptions {
  container: HTMLElement;
  conferenceName: string;
  productTitle: string;
  initial: ComparisonGraph;
  onQueryChange: (mode: CompareMode, minWeight: number) => void;
  onClose: () => void;
}

/** Side-by-side taxonomy view: mode radios, a weight slider (server-side
 * min_weight), and a layered SVG of the returned subgraph. */
export class GraphPanel {
  private svgHost: HTMLElement;
  private notice: HTMLElement;
  private slider: HTMLInputElement;
  private sliderValue: HTMLElement;
  private mode: CompareMode;

  constructor(private options: GraphPanelOptions) {
    this.mode = options.initial.mode;
    const { container, initial } = options;
    container.innerHTML = '';
    container.hidden = false;

    const panel = document.createElement('div');
    panel.className = 'graph-panel';

    const header = document.createElement('header');
    const heading = document.createElement('h2');
    heading.textContent = `${options.conferenceName} vs ${options.productTitle}`;
    header.appendChild(heading);
    const close = document.createElement('button');
    close.type = 'button';
    close.className = 'graph-close';
    close.textContent = 'close';
    close.addEventListener('click', () => {
      container.hidden = true;
      container.innerHTML = '';
      options.onClose();
    });
    header.appendChild(close);
    panel.appendChild(header);

    const controls = document.createElement('div');
    controls.className = 'graph-controls';
    for (const mode of MODES) {
      const label = document.createElement('label');
      const radio = document.createElement('input');
      radio.type = 'radio';
      radio.name = 'graph-mode';
      radio.value = mode;
      radio.checked = mode === initial.mode;
      radio.addEventListener('change', () => {
        if (radio.checked) {
          this.mode = mode;
          this.emitQuery();
        }
      });
      label.appendChild(radio);
      label.appendChild(document.createTextNode(mode));
      controls.appendChild(label);
    }

    const sliderLabel = document.createElement('label');
    sliderLabel.className = 'graph-slider';
    sliderLabel.appendChild(document.createTextNode('min weight '));
    this.slider = document.createElement('input');
    this.slider.type = 'range';
    this.slider.min = '0';
    // one past the heaviest weight, so the slider's top end empties the view
    const heaviest = Math.max(
      1,
      ...initial.nodes.map((n) => Math.max(n.conference_weight, n.product_weight)),
    );
    this.slider.max = String(heaviest + 1);
    this.slider.value = String(initial.min_weight);
    this.slider.addEventListener('change', () => this.emitQuery());
    sliderLabel.appendChild(this.slider);
    this.sliderValue = document.createElement('span');
    this.sliderValue.textContent = String(initial.min_weight);
    sliderLabel.appendChild(this.sliderValue);
    controls.appendChild(sliderLabel);
    panel.appendChild(controls);

    this.notice = document.createElement('p');
    this.notice.className = 'graph-notice';
    panel.appendChild(this.notice);

    this.svgHost = document.createElement('div');
    this.svgHost.className = 'graph-canvas';
    panel.appendChild(this.svgHost);

    container.appendChild(panel);
    this.render(initial);
  }

  private emitQuery(): void {
    const minWeight = Number(this.slider.value);
    this.sliderValue.textContent = String(minWeight);
    this.options.onQueryChange(this.mode, minWeight);
  }

  render(graph: ComparisonGraph): void {
    this.svgHost.innerHTML = '';
    if (graph.nodes.length === 0) {
      this.notice.textContent = 'no shared topics at this threshold';
      this.notice.hidden = false;
      return;
    }
    this.notice.hidden = true;
    this.svgHost.appendChild(drawGraph(graph));
  }
}

/** Longest-path layering: roots of the visible subgraph on top, children
 * below every parent they point to. */
function layerNodes(graph: ComparisonGraph): Map<string, number> {
  const parents = new Map<string, string[]>();
  for (const node of graph.nodes) parents.set(node.topic, []);
  for (const edge of graph.edges) parents.get(edge.src)?.push(edge.dst);

  const depth = new Map<string, number>();
  const visiting = new Set<string>();
  const resolve = (topic: string): number => {
    const known = depth.get(topic);
    if (known !== undefined) return known;
    if (visiting.has(topic)) return 0; // defensive; served graphs are acyclic
    visiting.add(topic);
    const ps = parents.get(topic) ?? [];
    const level = ps.length === 0 ? 0 : Math.max(...ps.map(resolve)) + 1;
    visiting.delete(topic);
    depth.set(topic, level);
    return level;
  };
  for (const node of graph.nodes) resolve(node.topic);
  return depth;
}

function drawGraph(graph: ComparisonGraph): SVGSVGElement {
  const depth = layerNodes(graph);
  const layers = new Map<number, ComparisonNode[]>();
  for (const node of graph.nodes) {
    const level = depth.get(node.topic) ?? 0;
    if (!layers.has(level)) layers.set(level, []);
    layers.get(level)!.push(node);
  }

  const layerGap = 90;
  const width = 760;
  const height = Math.max(1, layers.size) * layerGap + 40;
  const position = new Map<string, { x: number; y: number }>();
  for (const [level, nodes] of [...layers.entries()].sort((a, b) => a[0] - b[0])) {
    nodes.sort((a, b) => a.topic.localeCompare(b.topic));
    nodes.forEach((node, i) => {
      position.set(node.topic, {
        x: ((i + 1) * width) / (nodes.length + 1),
        y: 30 + level * layerGap,
      });
    });
  }

  const svg = document.createElementNS(SVG_NS, 'svg');
  svg.setAttribute('viewBox', `0 0 ${width} ${height}`);
  svg.setAttribute('width', '100%');

  for (const edge of graph.edges) {
    const from = position.get(edge.src);
    const to = position.get(edge.dst);
    if (!from || !to) continue;
    const line = document.createElementNS(SVG_NS, 'line');
    line.setAttribute('x1', String(from.x));
    line.setAttribute('y1', String(from.y));
    line.setAttribute('x2', String(to.x));
    line.setAttribute('y2', String(to.y));
    line.setAttribute('stroke', '#b9b9b9');
    svg.appendChild(line);
  }

  for (const node of graph.nodes) {
    const at = position.get(node.topic)!;
    const group = document.createElementNS(SVG_NS, 'g');
    group.setAttribute('class', `graph-node ${node.membership}`);
    group.dataset.topic = node.topic;

    const circle = document.createElementNS(SVG_NS, 'circle');
    circle.setAttribute('cx', String(at.x));
    circle.setAttribute('cy', String(at.y));
    circle.setAttribute('r', '9');
    circle.setAttribute('fill', FILL[node.membership]);

    // native hover tooltip with the chapter counts on both sides
    const tooltip = document.createElementNS(SVG_NS, 'title');
    tooltip.textContent =
      `${node.label}: conference ${node.conference_weight} chapters, ` +
      `publication ${node.product_weight} chapters`;
    circle.appendChild(tooltip);
    group.appendChild(circle);

    const text = document.createElementNS(SVG_NS, 'text');
    text.setAttribute('x', String(at.x));
    text.setAttribute('y', String(at.y + 22));
    text.setAttribute('text-anchor', 'middle');
    text.setAttribute('font-size', '11');
    text.textContent = node.label;
    group.appendChild(text);

    svg.appendChild(group);
  }

  return svg;
}
