import { ApiClient, ConferenceHit } from './api.js';
import { debounce } from './debounce.js';

export interface TypeaheadOptions {
  input: HTMLInputElement;
  dropdown: HTMLElement;
  api: ApiClient;
  onSelect: (hit: ConferenceHit) => void;
  delayMs?: number;
}

/** Debounced conference search box. Only the latest in-flight request may
 * render; earlier ones are aborted. */
export function attachTypeahead(options: TypeaheadOptions): void {
  const { input, dropdown, api, onSelect } = options;
  let controller: AbortController | null = null;

  const close = () => {
    dropdown.innerHTML = '';
    dropdown.hidden = true;
  };

  const render = (hits: ConferenceHit[]) => {
    dropdown.innerHTML = '';
    dropdown.hidden = false;
    if (hits.length === 0) {
      const row = document.createElement('div');
      row.className = 'typeahead-empty';
      row.textContent = 'no matches';
      dropdown.appendChild(row);
      return;
    }
    for (const hit of hits) {
      const row = document.createElement('button');
      row.type = 'button';
      row.className = 'typeahead-row';
      row.dataset.conferenceId = hit.conference_id;
      row.textContent = hit.name;
      row.addEventListener('click', () => {
        input.value = hit.name;
        close();
        onSelect(hit);
      });
      dropdown.appendChild(row);
    }
  };

  const renderError = () => {
    dropdown.innerHTML = '';
    dropdown.hidden = false;
    const row = document.createElement('div');
    row.className = 'typeahead-error';
    row.textContent = 'search failed — check the service and retry';
    dropdown.appendChild(row);
  };

  const search = debounce(async (text: string) => {
    controller?.abort();
    controller = new AbortController();
    try {
      render(await api.searchConferences(text, controller.signal));
    } catch (err) {
      if ((err as Error).name !== 'AbortError') renderError();
    }
  }, options.delayMs ?? 300);

  input.addEventListener('input', () => {
    const text = input.value.trim();
    if (!text) {
      search.cancel();
      controller?.abort();
      close();
      return;
    }
    search(text);
  });
}
