// Stage 4: browse the knowledge base by tree node, expand entry cards for
// details, and file human overrides that guide every later detection.

import type { AppContext } from '../context.js';
import type { EntryDoc, SequenceLabel, TreeNodeDoc } from '../types.js';
import { clear, el, option, showError } from '../ui.js';

interface Scope {
  nodeId: string;
  label: string;
  parent: string;
  level: 'S' | 'A' | 'E';
}

/** Entries are scoped by parent node: root lists E, entities A, actions S. */
function scopes(root: TreeNodeDoc): Scope[] {
  const out: Scope[] = [{ nodeId: root.id, label: 'root', parent: 'root', level: 'E' }];
  for (const entity of root.children) {
    out.push({
      nodeId: entity.id,
      label: entity.label,
      parent: `root/${entity.label}`,
      level: 'A',
    });
    for (const action of entity.children) {
      out.push({
        nodeId: action.id,
        label: `${entity.label} / ${action.label}`,
        parent: `root/${entity.label}/${action.label}`,
        level: 'S',
      });
    }
  }
  return out;
}

function entryCard(entry: EntryDoc, onOverride: (key: string, label: SequenceLabel, note: string) => void): HTMLElement {
  const card = el('div', { class: `entry-card ${entry.label.toLowerCase()}`, 'data-key': entry.key });
  const header = el('div', { class: 'entry-header' }, [
    el('span', { class: 'entry-level' }, [entry.level]),
    el('span', { class: 'entry-rendered' }, [entry.rendered]),
    el('span', { class: 'entry-label' }, [entry.label]),
    el('span', { class: 'entry-frequency muted' }, [`${entry.frequency}×`]),
    el('span', { class: 'entry-provenance muted' }, [entry.provenance]),
  ]);
  card.append(header);

  const detail = el('div', { class: 'entry-detail' }, [
    el('p', { class: 'entry-explanation' }, [entry.explanation || '(no explanation stored)']),
    el('p', { class: 'entry-sources muted' }, [
      entry.source_sequence_ids.length
        ? `seen in: ${entry.source_sequence_ids.join(', ')}`
        : 'no source samples',
    ]),
  ]);
  if (entry.override_note) {
    detail.append(el('p', { class: 'entry-override-note' }, [`override note: ${entry.override_note}`]));
  }

  const labelSelect = el('select', { class: 'override-label' }, []);
  labelSelect.append(option('Normal', 'Normal'), option('Anomaly', 'Anomaly'));
  labelSelect.value = entry.label === 'Normal' ? 'Anomaly' : 'Normal'; // offer the flip
  const noteInput = el('input', { class: 'override-note', placeholder: 'reviewer note' });
  const applyButton = el('button', { class: 'override-apply' }, ['Override']);
  applyButton.addEventListener('click', () =>
    onOverride(entry.key, labelSelect.value as SequenceLabel, noteInput.value),
  );
  detail.append(el('div', { class: 'override-controls' }, [labelSelect, noteInput, applyButton]));
  card.append(detail);

  header.addEventListener('click', () => card.classList.toggle('expanded'));
  return card;
}

export function renderKnowledgeStage(panel: HTMLElement, ctx: AppContext): void {
  clear(panel);
  if (!ctx.tree) {
    panel.append(el('p', { class: 'muted' }, ['Extract the hierarchy first (Stage 1).']));
    return;
  }

  const nodeSelect = el('select', { id: 'kb-node-select' });
  const allScopes = scopes(ctx.tree.root);
  for (const scope of allScopes) nodeSelect.append(option(scope.nodeId, scope.label));

  const summaryBox = el('div', { id: 'node-summary', class: 'pane' });
  const entriesBox = el('div', { id: 'entry-list', class: 'pane' });
  const status = el('span', { id: 'kb-status', class: 'muted' }, ['']);

  async function load(): Promise<void> {
    const scope = allScopes.find((s) => s.nodeId === nodeSelect.value);
    if (!scope) return;
    try {
      const summary = await ctx.api.nodeSummary(scope.nodeId);
      clear(summaryBox);
      summaryBox.append(
        el('h3', {}, [`Node ${summary.node_path.join(' / ')}`]),
        el('div', { class: 'stat-row' }, [
          el('span', { class: 'stat', 'data-stat': 'normal' }, [`normal ${summary.normal_count}`]),
          el('span', { class: 'stat', 'data-stat': 'anomaly' }, [`anomaly ${summary.anomaly_count}`]),
          el('span', { class: 'stat', 'data-stat': 'frequency' }, [
            `observations ${summary.total_frequency}`,
          ]),
          el('span', { class: 'stat', 'data-stat': 'levels' }, [
            `S ${summary.entries_by_level.S ?? 0} · A ${summary.entries_by_level.A ?? 0} · E ${summary.entries_by_level.E ?? 0}`,
          ]),
        ]),
      );
      const listing = await ctx.api.listEntries(scope.parent, scope.level);
      clear(entriesBox);
      entriesBox.append(el('h3', {}, [`Entries in scope (${scope.level} level)`]));
      if (listing.entries.length === 0) {
        entriesBox.append(el('p', { class: 'muted empty-state' }, ['No stored knowledge here yet.']));
      }
      for (const entry of listing.entries) {
        entriesBox.append(
          entryCard(entry, async (key, label, note) => {
            status.textContent = 'saving override…';
            try {
              await ctx.api.override(key, label, note);
              status.textContent = `override saved for ${key}`;
              await load(); // refresh cards and summary from the server
            } catch (error) {
              status.textContent = '';
              showError(entriesBox, (error as Error).message);
            }
          }),
        );
      }
    } catch (error) {
      showError(summaryBox, (error as Error).message);
    }
  }

  nodeSelect.addEventListener('change', () => void load());
  panel.append(el('div', { class: 'toolbar' }, [nodeSelect, status]));
  panel.append(el('div', { class: 'columns' }, [summaryBox, entriesBox]));
  void load();
}
