/** Text direction by the first strong directional character. */
export function textDirection(text: string): "rtl" | "ltr" {
  for (const ch of text) {
    const cp = ch.codePointAt(0)!;
    // Arabic, Arabic Supplement/Extended-A, Hebrew, presentation forms
    if (
      (cp >= 0x0590 && cp <= 0x08ff) ||
      (cp >= 0xfb1d && cp <= 0xfdff) ||
      (cp >= 0xfe70 && cp <= 0xfeff)
    ) {
      return "rtl";
    }
    if ((cp >= 0x41 && cp <= 0x5a) || (cp >= 0x61 && cp <= 0x7a) || (cp >= 0x00c0 && cp <= 0x024f)) {
      return "ltr";
    }
  }
  return "ltr";
}
