import type { ApiClient } from './api.js';
import type { CorporaDoc, ReportDoc, TreeDoc } from './types.js';

/** Session data shared across stages; all of it comes from API responses. */
export interface AppContext {
  api: ApiClient;
  tree: TreeDoc | null;
  templates: Record<string, string>;
  corpora: CorporaDoc;
  selectedCorpus: string | null;
  selectedSequence: string | null;
  lastReport: ReportDoc | null;
}

export async function refreshShared(ctx: AppContext): Promise<void> {
  try {
    ctx.tree = await ctx.api.getHierarchy();
  } catch {
    ctx.tree = null; // tree not extracted yet
  }
  try {
    ctx.templates = (await ctx.api.getTemplates()).templates;
  } catch {
    ctx.templates = {};
  }
  try {
    ctx.corpora = await ctx.api.listCorpora();
  } catch {
    ctx.corpora = {};
  }
}
