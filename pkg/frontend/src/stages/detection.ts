// Stage 3: run detection on one sequence. The level progress bar, anomalous
// span highlighting and explanation all come verbatim from the report; the
// "verify with LLM" action re-posts /detect with an LLM-backed mode for
// sequences that were only flagged by the pattern-matching filter.

import type { AppContext } from '../context.js';
import type { ReportDoc } from '../types.js';
import { clear, el, option, showError } from '../ui.js';
import { sequencePicker } from './decomposition.js';

const LEVELS: Array<{ level: 'S' | 'A' | 'E'; name: string }> = [
  { level: 'S', name: 'status' },
  { level: 'A', name: 'action' },
  { level: 'E', name: 'entity' },
];

function levelBar(report: ReportDoc): HTMLElement {
  const bar = el('div', { id: 'level-progress', class: 'level-progress' });
  const failedLevel = report.anomalous_segment?.level;
  for (const { level, name } of LEVELS) {
    const state = report.levels_completed.includes(level)
      ? 'done'
      : level === failedLevel
        ? 'failed'
        : 'pending';
    bar.append(el('span', { class: `level-step ${state}`, 'data-level': level }, [name]));
  }
  return bar;
}

async function renderReport(
  container: HTMLElement,
  report: ReportDoc,
  ctx: AppContext,
  onVerify: (() => void) | null,
): Promise<void> {
  clear(container);
  const banner = el(
    'div',
    { class: `verdict-banner ${report.final_label.toLowerCase()}`, id: 'verdict-banner' },
    [
      el('strong', {}, [report.final_label]),
      el('span', { id: 'llm-calls', class: 'muted' }, [` · LLM calls: ${report.llm_call_count}`]),
    ],
  );
  container.append(banner, levelBar(report));

  container.append(
    el('div', { id: 'explanation', class: 'pane' }, [
      el('h3', {}, ['Explanation']),
      el('p', {}, [report.explanation]),
    ]),
  );

  const trace = el('div', { id: 'trace', class: 'pane' }, [el('h3', {}, ['Trace'])]);
  for (const verdict of report.trace) {
    trace.append(
      el('div', { class: `trace-row ${verdict.label.toLowerCase()}`, 'data-key': verdict.key }, [
        el('span', { class: 'trace-level' }, [verdict.level]),
        el('span', { class: 'trace-rendered' }, [verdict.rendered]),
        el('span', { class: 'trace-method muted' }, [verdict.method]),
        el('span', { class: 'trace-label' }, [verdict.label]),
      ]),
    );
  }
  container.append(trace);

  // raw rows with the reported span highlighted verbatim
  try {
    const decomposition = await ctx.api.getDecomposition(report.sequence_id);
    const rows = el('div', { id: 'detect-rows', class: 'pane' }, [el('h3', {}, ['Sequence'])]);
    const span = report.anomalous_segment?.span;
    decomposition.events.forEach((templateId, index) => {
      const inSpan = span !== undefined && index >= span[0] && index < span[1];
      rows.append(
        el('div', { class: `event-row${inSpan ? ' anomaly-span' : ''}`, 'data-index': String(index) }, [
          el('span', { class: 'event-index' }, [String(index)]),
          el('span', { class: 'event-id' }, [templateId]),
          el('span', { class: 'event-text' }, [ctx.templates[templateId] ?? '']),
        ]),
      );
    });
    container.append(rows);
  } catch {
    // decomposition view is auxiliary; the report stands on its own
  }

  const flaggedOnly = report.trace.some((verdict) => verdict.method === 'FlagUnknown');
  if (flaggedOnly && onVerify) {
    const verify = el('button', { id: 'verify-llm' }, ['Verify flagged segments with LLM']);
    verify.addEventListener('click', onVerify);
    container.append(verify);
  }
}

export function renderDetectionStage(panel: HTMLElement, ctx: AppContext): void {
  clear(panel);
  if (!ctx.tree) {
    panel.append(el('p', { class: 'muted' }, ['Extract the hierarchy first (Stage 1).']));
    return;
  }

  const modeSelect = el('select', { id: 'mode-select' });
  for (const mode of ['flag-unknown', 'fixture', 'always-anomaly', 'always-normal', 'live']) {
    modeSelect.append(option(mode, mode));
  }
  const verifyModeSelect = el('select', { id: 'verify-mode-select' });
  for (const mode of ['fixture', 'live', 'always-anomaly', 'always-normal']) {
    verifyModeSelect.append(option(mode, `verify: ${mode}`));
  }
  const runButton = el('button', { id: 'detect-run' }, ['Run detection']);
  const result = el('div', { id: 'detect-result' }, [
    el('p', { class: 'muted' }, ['Pick a sequence and run detection.']),
  ]);

  async function run(mode: string): Promise<void> {
    if (!ctx.selectedSequence) return;
    try {
      const report = await ctx.api.detect(ctx.selectedSequence, { mode });
      ctx.lastReport = report;
      await renderReport(result, report, ctx, () => void run(verifyModeSelect.value));
    } catch (error) {
      showError(result, (error as Error).message);
    }
  }

  runButton.addEventListener('click', () => void run(modeSelect.value));

  panel.append(
    sequencePicker(ctx, (sequenceId) => {
      ctx.selectedSequence = sequenceId;
    }),
  );
  panel.append(el('div', { class: 'toolbar' }, [modeSelect, verifyModeSelect, runButton]));
  panel.append(result);
}
