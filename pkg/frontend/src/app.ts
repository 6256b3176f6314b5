// Stage shell: four tabs over one shared context. A full page reload
// reconstructs everything from API responses; nothing is cached locally.

import { ApiClient } from './api.js';
import { refreshShared, type AppContext } from './context.js';
import { renderDecompositionStage } from './stages/decomposition.js';
import { renderDetectionStage } from './stages/detection.js';
import { renderHierarchyStage } from './stages/hierarchy.js';
import { renderKnowledgeStage } from './stages/knowledge.js';
import { clear, el } from './ui.js';

const STAGES = [
  { id: '1', title: 'Hierarchy' },
  { id: '2', title: 'Decomposition' },
  { id: '3', title: 'Detection' },
  { id: '4', title: 'Knowledge base' },
] as const;

export interface App {
  ctx: AppContext;
  switchStage(stage: string): void;
  ready: Promise<void>;
}

export function mountApp(root: HTMLElement, api: ApiClient): App {
  const ctx: AppContext = {
    api,
    tree: null,
    templates: {},
    corpora: {},
    selectedCorpus: null,
    selectedSequence: null,
    lastReport: null,
  };

  clear(root);
  const header = el('header', {}, [
    el('h1', {}, ['logtriad']),
    el('span', { class: 'muted', id: 'api-url' }, [api.baseUrl]),
  ]);
  const nav = el('nav', { id: 'stage-nav' });
  const panel = el('main', { id: 'stage-panel', class: 'stage-panel' });
  root.append(header, nav, panel);

  let active = '1';

  function render(): void {
    clear(nav);
    for (const stage of STAGES) {
      const tab = el(
        'button',
        { class: `stage-tab${stage.id === active ? ' active' : ''}`, 'data-stage': stage.id },
        [`${stage.id} · ${stage.title}`],
      );
      tab.addEventListener('click', () => switchStage(stage.id));
      nav.append(tab);
    }
    if (active === '1') renderHierarchyStage(panel, ctx);
    else if (active === '2') renderDecompositionStage(panel, ctx);
    else if (active === '3') renderDetectionStage(panel, ctx);
    else renderKnowledgeStage(panel, ctx);
  }

  function switchStage(stage: string): void {
    active = stage;
    render();
  }

  const ready = refreshShared(ctx).then(render);
  return { ctx, switchStage, ready };
}
