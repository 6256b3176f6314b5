import { ApiClient, resolveBaseUrl } from './api.js';
import { mountApp } from './app.js';

const baseUrl = resolveBaseUrl(window.location.search, window.localStorage);
const root = document.getElementById('app');
if (root) {
  mountApp(root, new ApiClient(baseUrl));
}
