// Stage 2: pick a sequence, see its segments aligned with the raw events.
// Hovering a segment card highlights exactly the event rows in its span, and
// the batch trainer runs here with 1s status polling.

import type { AppContext } from '../context.js';
import type { DecompositionDoc, SegmentDoc } from '../types.js';
import { clear, el, option, showError } from '../ui.js';

const POLL_INTERVAL_MS = 1000;

function eventRows(doc: DecompositionDoc, ctx: AppContext): HTMLElement {
  const box = el('div', { id: 'event-rows', class: 'pane' }, [el('h3', {}, ['Raw sequence'])]);
  doc.events.forEach((templateId, index) => {
    box.append(
      el('div', { class: 'event-row', 'data-index': String(index) }, [
        el('span', { class: 'event-index' }, [String(index)]),
        el('span', { class: 'event-id' }, [templateId]),
        el('span', { class: 'event-text' }, [ctx.templates[templateId] ?? '']),
      ]),
    );
  });
  return box;
}

function segmentCard(segment: SegmentDoc, rows: () => NodeListOf<Element>): HTMLElement {
  const [start, end] = segment.span;
  const card = el(
    'div',
    {
      class: `segment-card level-${segment.level}`,
      'data-level': segment.level,
      'data-span-start': String(start),
      'data-span-end': String(end),
    },
    [
      el('span', { class: 'segment-level' }, [segment.level]),
      el('span', { class: 'segment-rendered' }, [segment.rendered]),
      el('span', { class: 'segment-span muted' }, [`[${start}, ${end})`]),
    ],
  );
  card.addEventListener('mouseenter', () => {
    rows().forEach((row) => {
      const index = Number((row as HTMLElement).dataset.index);
      row.classList.toggle('highlight', index >= start && index < end);
    });
  });
  card.addEventListener('mouseleave', () => {
    rows().forEach((row) => row.classList.remove('highlight'));
  });
  return card;
}

async function renderSequence(
  container: HTMLElement,
  sequenceId: string,
  ctx: AppContext,
): Promise<void> {
  clear(container);
  let doc: DecompositionDoc;
  try {
    doc = await ctx.api.getDecomposition(sequenceId);
  } catch (error) {
    showError(container, (error as Error).message);
    return;
  }
  const rowsBox = eventRows(doc, ctx);
  const rows = () => rowsBox.querySelectorAll('.event-row');
  const segments = el('div', { id: 'segment-list', class: 'pane' }, [el('h3', {}, ['Segments'])]);
  for (const group of [doc.status_segments, doc.action_segments, doc.entity_segments]) {
    for (const segment of group) segments.append(segmentCard(segment, rows));
  }
  container.append(segments, rowsBox);
}

export function sequencePicker(
  ctx: AppContext,
  onPick: (sequenceId: string) => void,
): HTMLElement {
  const corpusSelect = el('select', { id: 'corpus-select' });
  for (const name of Object.keys(ctx.corpora)) {
    corpusSelect.append(option(name, `${name} (${ctx.corpora[name]?.split})`));
  }
  const sequenceSelect = el('select', { id: 'sequence-select' });

  async function loadSequences(): Promise<void> {
    clear(sequenceSelect);
    const corpus = corpusSelect.value;
    if (!corpus) return;
    const listing = await ctx.api.listSequences(corpus);
    for (const info of listing.sequences) {
      const suffix = info.label ? ` · ${info.label}` : '';
      sequenceSelect.append(option(info.sequence_id, `${info.sequence_id} (${info.length}${suffix})`));
    }
    ctx.selectedCorpus = corpus;
    if (sequenceSelect.value) onPick(sequenceSelect.value);
  }

  corpusSelect.addEventListener('change', () => void loadSequences());
  sequenceSelect.addEventListener('change', () => {
    if (sequenceSelect.value) onPick(sequenceSelect.value);
  });
  if (ctx.selectedCorpus) corpusSelect.value = ctx.selectedCorpus;
  queueMicrotask(() => void loadSequences());
  return el('div', { class: 'picker' }, [corpusSelect, sequenceSelect]);
}

function trainControls(ctx: AppContext): HTMLElement {
  const trainButton = el('button', { id: 'train-button' }, ['Ingest training corpus']);
  const progress = el('span', { id: 'train-progress', class: 'muted' }, ['']);
  let timer: ReturnType<typeof setInterval> | null = null;

  async function poll(): Promise<void> {
    const status = await ctx.api.trainStatus();
    if (status.state === 'running') {
      progress.textContent = `training ${status.done}/${status.total}`;
      return;
    }
    if (timer) clearInterval(timer);
    timer = null;
    if (status.state === 'done' && status.report) {
      progress.textContent =
        `trained ${status.report.sequences} sequences, ` +
        `${status.report.new_entries} new entries`;
    } else if (status.state === 'error') {
      progress.textContent = `training failed: ${status.error?.message ?? 'unknown'}`;
    }
  }

  trainButton.addEventListener('click', async () => {
    const trainCorpus = Object.keys(ctx.corpora).find((name) => ctx.corpora[name]?.split === 'Train');
    if (!trainCorpus) {
      progress.textContent = 'no train-split corpus registered';
      return;
    }
    try {
      await ctx.api.startTraining(trainCorpus);
      progress.textContent = 'training…';
      timer = setInterval(() => void poll(), POLL_INTERVAL_MS);
      await poll();
    } catch (error) {
      progress.textContent = (error as Error).message;
    }
  });
  return el('div', { class: 'toolbar' }, [trainButton, progress]);
}

export function renderDecompositionStage(panel: HTMLElement, ctx: AppContext): void {
  clear(panel);
  if (!ctx.tree) {
    panel.append(el('p', { class: 'muted' }, ['Extract the hierarchy first (Stage 1).']));
    return;
  }
  const aligned = el('div', { id: 'aligned-view', class: 'columns' }, [
    el('p', { class: 'muted' }, ['Pick a sequence to decompose.']),
  ]);
  panel.append(trainControls(ctx));
  panel.append(
    sequencePicker(ctx, (sequenceId) => {
      ctx.selectedSequence = sequenceId;
      void renderSequence(aligned, sequenceId, ctx);
    }),
  );
  panel.append(aligned);
}
