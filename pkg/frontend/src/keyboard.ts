/**
 * Keyboard shortcuts for the labeling flow: 0/1/2 submit that label,
 * including numpad keys. Modified keypresses and keypresses inside form
 * fields are ignored so typing an adjudication note never fires a label.
 */

import { Label } from "./api.js";

export interface KeyTarget {
  tagName?: string;
  isContentEditable?: boolean;
}

export interface KeyPress {
  key: string;
  altKey?: boolean;
  ctrlKey?: boolean;
  metaKey?: boolean;
  target?: unknown;
}

const LABEL_KEYS: Record<string, Label> = {
  "0": 0,
  "1": 1,
  "2": 2,
};

const FORM_TAGS = new Set(["INPUT", "TEXTAREA", "SELECT"]);

export function labelForKeypress(evt: KeyPress): Label | null {
  if (evt.altKey || evt.ctrlKey || evt.metaKey) {
    return null;
  }
  const target = evt.target as KeyTarget | null | undefined;
  if (target && (FORM_TAGS.has(target.tagName ?? "") || target.isContentEditable)) {
    return null;
  }
  return LABEL_KEYS[evt.key] ?? null;
}
