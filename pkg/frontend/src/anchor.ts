// Span anchoring and selection helpers.
//
// The service stores spans as plain text; the UI anchors them to character
// offsets for highlighting (first occurrence) and converts user selections
// back to the exact substring (the *selected* occurrence, never the first).

export interface Highlight {
  start: number
  end: number
}

export interface HighlightParts {
  before: string
  middle: string
  after: string
}

/** All start offsets of `span` inside `text` (including overlapping hits). */
export function findOccurrences(text: string, span: string): number[] {
  if (span.length === 0) return []
  const hits: number[] = []
  let from = 0
  for (;;) {
    const at = text.indexOf(span, from)
    if (at < 0) break
    hits.push(at)
    from = at + 1
  }
  return hits
}

/** First-occurrence anchor, or null when the span is not in the text. */
export function anchorSpan(text: string, span: string): Highlight | null {
  const hits = findOccurrences(text, span)
  if (hits.length === 0) return null
  return { start: hits[0], end: hits[0] + span.length }
}

/**
 * Split the output into before/highlight/after segments. Rendering these as
 * three text nodes keeps unusual content (markdown markers, newlines,
 * non-Latin scripts) byte-for-byte intact.
 */
export function splitForHighlight(text: string, highlight: Highlight): HighlightParts {
  if (
    highlight.start < 0 ||
    highlight.end > text.length ||
    highlight.start > highlight.end
  ) {
    throw new RangeError(`highlight [${highlight.start}, ${highlight.end}) out of bounds`)
  }
  return {
    before: text.slice(0, highlight.start),
    middle: text.slice(highlight.start, highlight.end),
    after: text.slice(highlight.end),
  }
}

/**
 * Convert a selection (character offsets into the displayed output) to the
 * exact substring the user picked. No trimming or normalization: the payload
 * is the selection, verbatim.
 */
export function selectionToSpan(text: string, start: number, end: number): string {
  if (start > end) [start, end] = [end, start]
  if (start < 0 || end > text.length) {
    throw new RangeError(`selection [${start}, ${end}) out of bounds`)
  }
  return text.slice(start, end)
}

/** Invariant check used before rendering: offsets must reproduce the span. */
export function highlightMatchesSpan(text: string, highlight: Highlight, span: string): boolean {
  return text.slice(highlight.start, highlight.end) === span
}
