/** Transient status messages in the corner of the page. */

export function toast(message: string, kind: "info" | "error" = "info"): void {
  if (typeof document === "undefined") return;
  let host = document.getElementById("toasts");
  if (!host) {
    host = document.createElement("div");
    host.id = "toasts";
    document.body.appendChild(host);
  }
  const el = document.createElement("div");
  el.className = `toast toast-${kind}`;
  el.textContent = message;
  host.appendChild(el);
  setTimeout(() => el.remove(), kind === "error" ? 6000 : 3500);
}
