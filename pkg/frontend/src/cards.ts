import type { Card, TopicEntry, Verdict } from './api.js';

export interface CardCallbacks {
  onFeedback: (card: Card, verdict: Verdict) => void;
  onVisualize: (card: Card) => void;
}

const KIND_LABEL: Record<Card['kind'], string> = {
  book: 'book',
  journal_year: 'journal',
  conference_series: 'proceedings',
};

export function renderTopicPanel(container: HTMLElement, name: string, topics: TopicEntry[]): void {
  container.innerHTML = '';
  const heading = document.createElement('h2');
  heading.textContent = name;
  container.appendChild(heading);
  const list = document.createElement('ul');
  list.className = 'topic-panel';
  for (const entry of topics) {
    const item = document.createElement('li');
    item.textContent = `${entry.label} (${entry.weight})`;
    list.appendChild(item);
  }
  container.appendChild(list);
}

/** Cards render in response order; the list owns no sorting of its own. */
export function renderCards(container: HTMLElement, cards: Card[], callbacks: CardCallbacks): void {
  container.innerHTML = '';
  if (cards.length === 0) {
    const empty = document.createElement('p');
    empty.className = 'empty-state';
    empty.textContent =
      'No recommendations match the current filters. Try widening the year range, ' +
      'allowing more publication types, or clearing the person filter.';
    container.appendChild(empty);
    return;
  }
  for (const card of cards) {
    container.appendChild(renderCard(card, callbacks));
  }
}

function renderCard(card: Card, callbacks: CardCallbacks): HTMLElement {
  const root = document.createElement('article');
  root.className = 'card';
  root.dataset.productId = card.product_id;

  const header = document.createElement('header');
  const title = document.createElement('a');
  title.className = 'card-title';
  title.textContent = card.title;
  if (card.link) {
    title.href = card.link;
    title.target = '_blank';
    title.rel = 'noopener';
  }
  header.appendChild(title);

  const meta = document.createElement('span');
  meta.className = 'card-meta';
  const years = card.year_min === card.year_max ? `${card.year_min}` : `${card.year_min}–${card.year_max}`;
  meta.textContent = `${KIND_LABEL[card.kind]} · ${years}`;
  header.appendChild(meta);

  const score = document.createElement('span');
  score.className = 'card-score';
  score.textContent = card.score.toFixed(3);
  score.title = 'similarity with the selected conference';
  header.appendChild(score);
  root.appendChild(header);

  if (card.persons.length > 0) {
    const persons = document.createElement('p');
    persons.className = 'card-persons';
    persons.textContent = card.persons.join(', ');
    root.appendChild(persons);
  }

  const topics = document.createElement('ul');
  topics.className = 'card-topics';
  for (const entry of card.topics) {
    const chip = document.createElement('li');
    chip.textContent = entry.label;
    chip.title = `${entry.weight} chapters`;
    topics.appendChild(chip);
  }
  root.appendChild(topics);

  const actions = document.createElement('footer');
  actions.className = 'card-actions';
  actions.appendChild(feedbackButton(card, 'positive', '\u{1F44D}', callbacks));
  actions.appendChild(feedbackButton(card, 'negative', '\u{1F44E}', callbacks));

  const visualize = document.createElement('button');
  visualize.type = 'button';
  visualize.className = 'visualize';
  visualize.textContent = 'visualize topic taxonomy';
  visualize.addEventListener('click', () => callbacks.onVisualize(card));
  actions.appendChild(visualize);

  root.appendChild(actions);
  return root;
}

function feedbackButton(
  card: Card,
  verdict: Verdict,
  glyph: string,
  callbacks: CardCallbacks,
): HTMLButtonElement {
  const button = document.createElement('button');
  button.type = 'button';
  button.className = `feedback ${verdict}`;
  button.dataset.verdict = verdict;
  button.textContent = glyph;
  button.setAttribute('aria-pressed', String(card.feedback === verdict));
  button.addEventListener('click', () => callbacks.onFeedback(card, verdict));
  return button;
}
