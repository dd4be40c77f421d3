// Criterion checklist <-> notes-string serialization. The service stores the
// annotator's per-criterion checkboxes as a plain text block inside the
// judgment notes, one "[x] ..." / "[ ] ..." line per criterion.

export interface CriterionCheck {
  text: string
  checked: boolean
}

export function serializeCriteriaNotes(checks: CriterionCheck[], comment = ''): string {
  const lines = checks.map((c) => `${c.checked ? '[x]' : '[ ]'} ${c.text}`)
  if (comment.trim().length > 0) {
    lines.push(`note: ${comment.trim()}`)
  }
  return lines.join('\n')
}

export function parseCriteriaNotes(notes: string): { checks: CriterionCheck[]; comment: string } {
  const checks: CriterionCheck[] = []
  const commentLines: string[] = []
  for (const line of notes.split('\n')) {
    if (line.startsWith('[x] ')) {
      checks.push({ text: line.slice(4), checked: true })
    } else if (line.startsWith('[ ] ')) {
      checks.push({ text: line.slice(4), checked: false })
    } else if (line.startsWith('note: ')) {
      commentLines.push(line.slice(6))
    }
  }
  return { checks, comment: commentLines.join('\n') }
}

export function allChecked(checks: CriterionCheck[]): boolean {
  return checks.length > 0 && checks.every((c) => c.checked)
}
