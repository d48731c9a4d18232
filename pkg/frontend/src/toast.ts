/** Transient notifications; error bodies from the server render verbatim. */

export type ToastKind = 'info' | 'error';

export function showToast(message: string, kind: ToastKind = 'info',
                          host: HTMLElement = document.body): HTMLElement {
  let stack = host.querySelector<HTMLElement>('.toast-stack');
  if (!stack) {
    stack = document.createElement('div');
    stack.className = 'toast-stack';
    host.appendChild(stack);
  }
  const toast = document.createElement('div');
  toast.className = `toast toast-${kind}`;
  toast.textContent = message;
  stack.appendChild(toast);
  setTimeout(() => toast.remove(), 6000);
  return toast;
}
