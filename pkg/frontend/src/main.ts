// Bootstrap: resolve the annotator identity, build the API client, start the
// review app, and wire the keyboard shortcuts.

import { ApiClient } from './api.js'
import { ReviewApp } from './app.js'
import { actionForKey } from './keyboard.js'

function annotatorId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get('annotator')
  if (fromQuery) {
    window.localStorage.setItem('hadkit-annotator', fromQuery)
    return fromQuery
  }
  const stored = window.localStorage.getItem('hadkit-annotator')
  if (stored) return stored
  const typed = window.prompt('Annotator id:') ?? ''
  window.localStorage.setItem('hadkit-annotator', typed)
  return typed
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search)
  const annotator = annotatorId()
  const client = new ApiClient(annotator, '', params.get('token'))
  const root = document.getElementById('app')
  if (!root) throw new Error('missing #app container')
  const who = document.getElementById('annotator-name')
  if (who) who.textContent = annotator

  const app = new ReviewApp(root, client, annotator)
  document.addEventListener('keydown', (event) => {
    const target = event.target as HTMLElement | null
    const typingInField =
      !!target && (target.tagName === 'TEXTAREA' || target.tagName === 'INPUT')
    const action = actionForKey(event.key, { editing: app.isEditing, typingInField })
    if (!action) return
    event.preventDefault()
    switch (action) {
      case 'pass':
        void app.submit('Pass')
        break
      case 'fail':
        void app.submit('Fail')
        break
      case 'edit':
        app.enterEditMode()
        break
      case 'save-edit':
        void app.saveEdit()
        break
      case 'cancel-edit':
        app.cancelEdit()
        break
    }
  })
  await app.start()
}

void boot()
