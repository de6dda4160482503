import { describe, expect, it } from "vitest";

import { labelForKeypress } from "../src/keyboard.js";

describe("labelForKeypress", () => {
  it("maps 0/1/2 to labels", () => {
    expect(labelForKeypress({ key: "0" })).toBe(0);
    expect(labelForKeypress({ key: "1" })).toBe(1);
    expect(labelForKeypress({ key: "2" })).toBe(2);
  });

  it("ignores other keys", () => {
    for (const key of ["3", "a", "Enter", "Escape", " "]) {
      expect(labelForKeypress({ key })).toBeNull();
    }
  });

  it("ignores modified keypresses", () => {
    expect(labelForKeypress({ key: "1", ctrlKey: true })).toBeNull();
    expect(labelForKeypress({ key: "1", altKey: true })).toBeNull();
    expect(labelForKeypress({ key: "1", metaKey: true })).toBeNull();
  });

  it("ignores keypresses inside form fields", () => {
    expect(labelForKeypress({ key: "1", target: { tagName: "INPUT" } })).toBeNull();
    expect(labelForKeypress({ key: "2", target: { tagName: "TEXTAREA" } })).toBeNull();
    expect(
      labelForKeypress({ key: "0", target: { tagName: "DIV", isContentEditable: true } }),
    ).toBeNull();
    expect(labelForKeypress({ key: "0", target: { tagName: "DIV" } })).toBe(0);
  });
});
