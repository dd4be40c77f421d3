// Keyboard-first review flow: P = pass, F = fail, E = edit.

export type ReviewAction = 'pass' | 'fail' | 'edit' | 'save-edit' | 'cancel-edit'

export interface KeyContext {
  editing: boolean
  typingInField: boolean
}

export function actionForKey(key: string, context: KeyContext): ReviewAction | null {
  if (context.typingInField) {
    // Don't hijack keys while the annotator types in the edit textarea;
    // Escape still cancels.
    return key === 'Escape' && context.editing ? 'cancel-edit' : null
  }
  if (context.editing) {
    if (key === 'Escape') return 'cancel-edit'
    if (key === 'Enter') return 'save-edit'
    return null
  }
  switch (key.toLowerCase()) {
    case 'p':
      return 'pass'
    case 'f':
      return 'fail'
    case 'e':
      return 'edit'
    default:
      return null
  }
}
