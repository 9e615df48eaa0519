import { ALL_KINDS, ApiClient, Card, CompareMode, ConferenceHit, Filters, Verdict, filterParams } from './api.js';
import { renderCards, renderTopicPanel } from './cards.js';
import { GraphPanel } from './graph.js';
import { initialState, UiState } from './state.js';
import { attachTypeahead } from './typeahead.js';

interface Elements {
  search: HTMLInputElement;
  dropdown: HTMLElement;
  topicPanel: HTMLElement;
  filterForm: HTMLFormElement;
  cardList: HTMLElement;
  status: HTMLElement;
  graphHost: HTMLElement;
  exportCsv: HTMLButtonElement;
  exportJson: HTMLButtonElement;
}

export interface AppOptions {
  root: Document;
  baseUrl?: string;
  typeaheadDelayMs?: number;
}

/** Wires the single-page flow together. All data comes from the documented
 * endpoints; the client never ranks or rescores anything itself. */
export class App {
  readonly state: UiState = initialState();
  readonly api: ApiClient;
  private elements: Elements;
  private recommendationsController: AbortController | null = null;
  private graphController: AbortController | null = null;
  private graphPanel: GraphPanel | null = null;

  constructor(private options: AppOptions) {
    this.api = new ApiClient(options.baseUrl ?? '');
    const doc = options.root;
    const byId = <T extends HTMLElement>(id: string): T => {
      const el = doc.getElementById(id);
      if (!el) throw new Error(`missing element #${id}`);
      return el as T;
    };
    this.elements = {
      search: byId<HTMLInputElement>('conference-search'),
      dropdown: byId('conference-dropdown'),
      topicPanel: byId('topic-panel'),
      filterForm: byId<HTMLFormElement>('filters'),
      cardList: byId('card-list'),
      status: byId('status'),
      graphHost: byId('graph-host'),
      exportCsv: byId<HTMLButtonElement>('export-csv'),
      exportJson: byId<HTMLButtonElement>('export-json'),
    };

    attachTypeahead({
      input: this.elements.search,
      dropdown: this.elements.dropdown,
      api: this.api,
      delayMs: options.typeaheadDelayMs,
      onSelect: (hit) => void this.selectConference(hit),
    });

    this.elements.filterForm.addEventListener('submit', (event) => {
      event.preventDefault();
      void this.refreshRecommendations();
    });
    this.elements.filterForm.addEventListener('change', () => void this.refreshRecommendations());
    this.elements.exportCsv.addEventListener('click', () => void this.exportResults('csv'));
    this.elements.exportJson.addEventListener('click', () => void this.exportResults('json'));
  }

  async selectConference(hit: ConferenceHit): Promise<void> {
    this.state.conference = hit;
    const topics = await this.api.conferenceTopics(hit.conference_id);
    renderTopicPanel(this.elements.topicPanel, hit.name, topics);
    await this.refreshRecommendations();
  }

  /** The single source of filter truth is the controls; every request reads
   * them fresh, so what the form shows is exactly what was asked. */
  readFilters(): Filters {
    const form = this.elements.filterForm;
    const kinds = ALL_KINDS.filter(
      (kind) => form.querySelector<HTMLInputElement>(`input[name="kind-${kind}"]`)?.checked,
    );
    const year = (name: string): number | null => {
      const raw = form.querySelector<HTMLInputElement>(`input[name="${name}"]`)?.value ?? '';
      return raw.trim() ? Number(raw) : null;
    };
    const limitRaw = form.querySelector<HTMLInputElement>('input[name="limit"]')?.value ?? '';
    const person = form.querySelector<HTMLInputElement>('input[name="person"]')?.value ?? '';
    return {
      kinds,
      from_year: year('from-year'),
      to_year: year('to-year'),
      limit: limitRaw.trim() ? Number(limitRaw) : this.state.filters.limit,
      person,
    };
  }

  async refreshRecommendations(): Promise<void> {
    const conference = this.state.conference;
    if (!conference) return;
    this.recommendationsController?.abort();
    this.recommendationsController = new AbortController();
    const filters = this.readFilters();
    this.state.filters = filters;
    const params = filterParams(conference.conference_id, filters);
    try {
      const response = await this.api.recommendations(
        conference.conference_id,
        filters,
        this.recommendationsController.signal,
      );
      this.state.cards = response.cards;
      this.state.lastRequest = params.toString();
      this.elements.status.textContent = `${response.cards.length} recommendations`;
      renderCards(this.elements.cardList, response.cards, {
        onFeedback: (card, verdict) => void this.sendFeedback(card, verdict),
        onVisualize: (card) => void this.openGraph(card),
      });
    } catch (err) {
      if ((err as Error).name === 'AbortError') return;
      this.elements.status.textContent = `request failed: ${(err as Error).message}`;
    }
  }

  async sendFeedback(card: Card, verdict: Verdict): Promise<void> {
    const conference = this.state.conference;
    if (!conference) return;
    await this.api.submitFeedback(conference.conference_id, card.product_id, verdict);
    // re-render from the card list we hold; latest verdict wins
    const updated = this.state.cards.map((c) =>
      c.product_id === card.product_id ? { ...c, feedback: verdict } : c,
    );
    this.state.cards = updated;
    renderCards(this.elements.cardList, updated, {
      onFeedback: (target, v) => void this.sendFeedback(target, v),
      onVisualize: (target) => void this.openGraph(target),
    });
  }

  async openGraph(card: Card, mode: CompareMode = 'all', minWeight = 0): Promise<void> {
    const conference = this.state.conference;
    if (!conference) return;
    const graph = await this.api.compare(conference.conference_id, card.product_id, mode, minWeight);
    this.state.graph = { productId: card.product_id, productTitle: card.title, mode, minWeight };
    this.graphPanel = new GraphPanel({
      container: this.elements.graphHost,
      conferenceName: conference.name,
      productTitle: card.title,
      initial: graph,
      onQueryChange: (nextMode, nextWeight) => void this.updateGraph(card, nextMode, nextWeight),
      onClose: () => {
        this.state.graph = null;
        this.graphPanel = null;
      },
    });
  }

  private async updateGraph(card: Card, mode: CompareMode, minWeight: number): Promise<void> {
    const conference = this.state.conference;
    if (!conference || !this.graphPanel) return;
    this.graphController?.abort();
    this.graphController = new AbortController();
    try {
      const graph = await this.api.compare(
        conference.conference_id,
        card.product_id,
        mode,
        minWeight,
        this.graphController.signal,
      );
      this.state.graph = { productId: card.product_id, productTitle: card.title, mode, minWeight };
      this.graphPanel.render(graph);
    } catch (err) {
      if ((err as Error).name !== 'AbortError') {
        this.elements.status.textContent = `comparison failed: ${(err as Error).message}`;
      }
    }
  }

  async exportResults(format: 'csv' | 'json'): Promise<void> {
    const conference = this.state.conference;
    if (!conference) return;
    const filters = this.readFilters();
    const bytes = await this.api.fetchExport(conference.conference_id, filters, format);
    deliverDownload(this.options.root, `recommendations.${format}`, bytes, format === 'csv' ? 'text/csv' : 'application/json');
  }
}

/** Hand the bytes to the browser as a download. Also announced as a DOM event
 * so automated tests can capture exactly what the user would save. */
export function deliverDownload(doc: Document, filename: string, bytes: Uint8Array, mime: string): void {
  doc.dispatchEvent(new CustomEvent('bookrec-export', { detail: { filename, bytes } }));
  const scope = (doc.defaultView ?? globalThis) as typeof globalThis & {
    navigator?: { userAgent?: string };
  };
  const urlApi = scope.URL;
  const agent = scope.navigator?.userAgent ?? '';
  // simulated DOMs listen for the event instead of saving a file
  if (typeof urlApi?.createObjectURL !== 'function' || agent.includes('jsdom')) return;
  const blob = new Blob([bytes.buffer as ArrayBuffer], { type: mime });
  const url = urlApi.createObjectURL(blob);
  const anchor = doc.createElement('a');
  anchor.href = url;
  anchor.download = filename;
  doc.body.appendChild(anchor);
  anchor.click();
  anchor.remove();
  urlApi.revokeObjectURL(url);
}

export function bootstrap(options: AppOptions): App {
  return new App(options);
}
