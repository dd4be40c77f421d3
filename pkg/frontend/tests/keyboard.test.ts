import { describe, expect, it } from 'vitest'

import { actionForKey } from '../src/keyboard.js'

const REVIEW = { editing: false, typingInField: false }
const EDITING = { editing: true, typingInField: false }
const TYPING = { editing: true, typingInField: true }

describe('actionForKey', () => {
  it('maps P/F/E during review, case-insensitive', () => {
    expect(actionForKey('p', REVIEW)).toBe('pass')
    expect(actionForKey('P', REVIEW)).toBe('pass')
    expect(actionForKey('f', REVIEW)).toBe('fail')
    expect(actionForKey('E', REVIEW)).toBe('edit')
    expect(actionForKey('x', REVIEW)).toBeNull()
  })

  it('maps Enter/Escape while editing', () => {
    expect(actionForKey('Enter', EDITING)).toBe('save-edit')
    expect(actionForKey('Escape', EDITING)).toBe('cancel-edit')
    expect(actionForKey('p', EDITING)).toBeNull()
  })

  it('never hijacks keys typed into a field except Escape', () => {
    expect(actionForKey('p', TYPING)).toBeNull()
    expect(actionForKey('Enter', TYPING)).toBeNull()
    expect(actionForKey('Escape', TYPING)).toBe('cancel-edit')
    expect(actionForKey('p', { editing: false, typingInField: true })).toBeNull()
  })
})
