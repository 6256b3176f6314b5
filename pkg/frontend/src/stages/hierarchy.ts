// Stage 1: extract the hierarchy and explore it. Hovering a node lists the
// templates bound at or below it; the text comes from the /templates response.

import type { AppContext } from '../context.js';
import type { TreeNodeDoc } from '../types.js';
import { clear, el, showError } from '../ui.js';

function boundTemplates(node: TreeNodeDoc): string[] {
  if (node.template_id) return [node.template_id];
  return node.children.flatMap(boundTemplates);
}

function renderNode(node: TreeNodeDoc, panel: HTMLElement, ctx: AppContext): HTMLElement {
  const label = el('span', { class: `tree-label level-${node.level}`, 'data-node-id': node.id }, [
    node.label,
  ]);
  label.addEventListener('mouseenter', () => {
    clear(panel);
    panel.append(el('h3', {}, [`Templates under ${node.label}`]));
    for (const templateId of boundTemplates(node)) {
      const text = ctx.templates[templateId] ?? '';
      panel.append(
        el('div', { class: 'template-row', 'data-template-id': templateId }, [
          el('span', { class: 'template-id' }, [templateId]),
          el('span', { class: 'template-text' }, [text]),
        ]),
      );
    }
  });
  const item = el('div', { class: 'tree-node' }, [label]);
  if (node.children.length > 0) {
    const children = el('div', { class: 'tree-children' });
    for (const child of node.children) children.append(renderNode(child, panel, ctx));
    item.append(children);
  }
  return item;
}

export function renderHierarchyStage(panel: HTMLElement, ctx: AppContext): void {
  clear(panel);
  const extractButton = el('button', { id: 'extract-button' }, ['Extract hierarchy']);
  const status = el('span', { id: 'extract-status', class: 'muted' }, ['']);
  panel.append(el('div', { class: 'toolbar' }, [extractButton, status]));

  const statsRow = el('div', { id: 'stats-slot' });
  const body = el('div', { class: 'columns' });
  const treeBox = el('div', { id: 'tree', class: 'pane' });
  const templatePanel = el('div', { id: 'template-panel', class: 'pane' }, [
    el('p', { class: 'muted' }, ['Hover a node to see its bound templates.']),
  ]);
  body.append(treeBox, templatePanel);
  panel.append(statsRow, body);

  function drawTree(): void {
    clear(statsRow);
    clear(treeBox);
    if (!ctx.tree) {
      treeBox.append(el('p', { class: 'muted' }, ['No hierarchy yet: extract it first.']));
      return;
    }
    const stats = ctx.tree.stats;
    statsRow.append(
      el('div', { id: 'tree-stats', class: 'stat-row' }, [
        el('span', { class: 'stat', 'data-stat': 'entities' }, [`entities ${stats.entity_count}`]),
        el('span', { class: 'stat', 'data-stat': 'actions' }, [`actions ${stats.action_count}`]),
        el('span', { class: 'stat', 'data-stat': 'statuses' }, [`statuses ${stats.status_count}`]),
        el('span', { class: 'stat', 'data-stat': 'templates' }, [
          `templates ${stats.template_count}`,
        ]),
      ]),
    );
    treeBox.append(renderNode(ctx.tree.root, templatePanel, ctx));
  }

  extractButton.addEventListener('click', async () => {
    status.textContent = 'extracting…';
    extractButton.setAttribute('disabled', '');
    try {
      ctx.tree = await ctx.api.extractHierarchy();
      ctx.templates = (await ctx.api.getTemplates()).templates;
      status.textContent = 'done';
      drawTree();
    } catch (error) {
      status.textContent = '';
      showError(treeBox, `extraction failed: ${(error as Error).message}`);
    } finally {
      extractButton.removeAttribute('disabled');
    }
  });

  drawTree();
}
