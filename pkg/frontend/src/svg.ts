// String-built markup helpers. Views render to plain strings so the whole
// chart layer stays deterministic and snapshot-testable without a DOM.

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Fixed two-decimal pixel formatting keeps geometry byte-stable. */
export function px(value: number): string {
  return value.toFixed(2);
}

export function attrs(pairs: Record<string, string | number>): string {
  return Object.entries(pairs)
    .map(([key, value]) => `${key}="${typeof value === "number" ? px(value) : esc(value)}"`)
    .join(" ");
}

export function el(tag: string, pairs: Record<string, string | number>, children = ""): string {
  const head = attrs(pairs);
  const open = head ? `<${tag} ${head}>` : `<${tag}>`;
  return children === "" && tag !== "text" && tag !== "title"
    ? `${open.slice(0, -1)} />`
    : `${open}${children}</${tag}>`;
}

/** Probability display: four decimals, exponent form for near-zero values. */
export function fmtProb(value: number): string {
  if (value === 0) {
    return "0";
  }
  return Math.abs(value) < 5e-5 ? value.toExponential(2) : value.toFixed(4);
}
