// Small DOM helpers; everything is plain elements, no framework.

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    if (name === 'class') node.className = value;
    else node.setAttribute(name, value);
  }
  for (const child of children) {
    node.append(typeof child === 'string' ? document.createTextNode(child) : child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

export function option(value: string, text: string): HTMLOptionElement {
  return el('option', { value }, [text]);
}

/** Replace a container's content with an error banner. */
export function showError(container: HTMLElement, message: string): void {
  clear(container);
  container.append(el('div', { class: 'error-banner', role: 'alert' }, [message]));
}
