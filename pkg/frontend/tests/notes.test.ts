import { describe, expect, it } from 'vitest'

import { allChecked, parseCriteriaNotes, serializeCriteriaNotes } from '../src/notes.js'

const CHECKS = [
  { text: 'The task output contains an error in the specified span.', checked: true },
  { text: 'There are no other errors in the task output.', checked: false },
]

describe('criteria notes serialization', () => {
  it('writes one checkbox line per criterion', () => {
    const notes = serializeCriteriaNotes(CHECKS)
    expect(notes.split('\n')).toEqual([
      '[x] The task output contains an error in the specified span.',
      '[ ] There are no other errors in the task output.',
    ])
  })

  it('appends a trimmed free-text comment', () => {
    const notes = serializeCriteriaNotes(CHECKS, '  span too wide  ')
    expect(notes.endsWith('note: span too wide')).toBe(true)
  })

  it('round-trips through parse', () => {
    const notes = serializeCriteriaNotes(CHECKS, 'borderline')
    const parsed = parseCriteriaNotes(notes)
    expect(parsed.checks).toEqual(CHECKS)
    expect(parsed.comment).toBe('borderline')
  })

  it('parses unknown lines as non-criteria', () => {
    const parsed = parseCriteriaNotes('random preamble\n[x] only line')
    expect(parsed.checks).toEqual([{ text: 'only line', checked: true }])
  })
})

describe('allChecked', () => {
  it('requires at least one criterion and all boxes ticked', () => {
    expect(allChecked([])).toBe(false)
    expect(allChecked(CHECKS)).toBe(false)
    expect(allChecked(CHECKS.map((c) => ({ ...c, checked: true })))).toBe(true)
  })
})
