// DOM glue for the review flow. All decisions and transitions go through the
// service API; this layer only renders state and captures input. Text is
// always inserted via text nodes (never innerHTML), so outputs containing
// markdown markers, newlines, or non-Latin scripts render losslessly.

import { anchorSpan, highlightMatchesSpan, selectionToSpan, splitForHighlight } from './anchor.js'
import { ApiClient, VersionConflictError } from './api.js'
import { perTypeRows, summaryLine } from './dashboard.js'
import { serializeCriteriaNotes, type CriterionCheck } from './notes.js'
import type { ItemView, TaxonomyView, Verdict } from './types.js'

const STATS_POLL_MS = 10_000

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag)
  if (className) node.className = className
  if (text !== undefined) node.textContent = text
  return node
}

function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild)
}

export class ReviewApp {
  private item: ItemView | null = null
  private taxonomy: TaxonomyView | null = null
  private checks: CriterionCheck[] = []
  private editing = false

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private annotator: string,
  ) {}

  get isEditing(): boolean {
    return this.editing
  }

  async start(): Promise<void> {
    this.taxonomy = await this.client.taxonomy()
    await this.refreshStats()
    window.setInterval(() => void this.refreshStats(), STATS_POLL_MS)
    await this.loadNext()
  }

  private section(id: string): HTMLElement {
    const node = this.root.querySelector<HTMLElement>(`#${id}`)
    if (!node) throw new Error(`missing layout section #${id}`)
    return node
  }

  private banner(message: string, kind: 'info' | 'conflict' | 'error' = 'info'): void {
    const host = this.section('banner')
    clear(host)
    if (message) host.appendChild(el('div', `banner banner-${kind}`, message))
  }

  async refreshStats(): Promise<void> {
    try {
      const stats = await this.client.stats()
      this.section('dashboard-summary').textContent = summaryLine(stats)
      const table = this.section('dashboard-types')
      clear(table)
      for (const row of perTypeRows(stats)) {
        const tr = el('div', 'type-row')
        tr.appendChild(el('span', 'type-name', row.type))
        tr.appendChild(el('span', 'type-cell', `${row.items} items`))
        tr.appendChild(el('span', 'type-cell', `agree ${row.agreement}`))
        tr.appendChild(el('span', 'type-cell', `pass ${row.passRate}`))
        table.appendChild(tr)
      }
    } catch {
      // dashboard is best-effort; the review flow must keep working
    }
  }

  async loadNext(): Promise<void> {
    this.editing = false
    this.item = await this.client.nextItem()
    this.renderItem()
  }

  private criteriaFor(typeName: string): string[] {
    if (!this.taxonomy) return []
    const entry = this.taxonomy.types.find((t) => t.name === typeName || t.id === typeName)
    return entry ? entry.criteria : []
  }

  private renderItem(): void {
    const host = this.section('item')
    clear(host)
    this.section('side-panel').hidden = true
    if (!this.item) {
      host.appendChild(el('p', 'done', 'Queue exhausted — nothing left to review.'))
      return
    }
    const item = this.item

    const meta = el('div', 'item-meta')
    meta.appendChild(el('span', 'item-id', item.item_id))
    meta.appendChild(el('span', 'task-kind', item.task_kind))
    meta.appendChild(el('span', 'claimed-type', item.type))
    host.appendChild(meta)

    host.appendChild(el('h3', undefined, 'Task input'))
    host.appendChild(el('pre', 'text-block', item.task_input))

    host.appendChild(el('h3', undefined, 'Task output'))
    const output = el('pre', 'text-block output-block')
    const anchor = item.span ? anchorSpan(item.output, item.span) : null
    if (anchor && highlightMatchesSpan(item.output, anchor, item.span)) {
      const parts = splitForHighlight(item.output, anchor)
      output.appendChild(document.createTextNode(parts.before))
      const mark = el('mark', 'span-highlight', parts.middle)
      output.appendChild(mark)
      output.appendChild(document.createTextNode(parts.after))
    } else {
      output.appendChild(document.createTextNode(item.output))
      if (item.span) {
        const panel = this.section('side-panel')
        panel.hidden = false
        clear(panel)
        panel.appendChild(el('h4', undefined, 'Unanchored span'))
        panel.appendChild(
          el('p', 'hint', 'The claimed span is not a substring of the output:'),
        )
        panel.appendChild(el('pre', 'text-block unanchored-span', item.span))
      }
    }
    host.appendChild(output)

    this.renderChecklist(item)
    this.renderControls(item)
  }

  private renderChecklist(item: ItemView): void {
    const host = this.section('criteria')
    clear(host)
    host.appendChild(el('h3', undefined, `Criteria for ${item.type}`))
    this.checks = this.criteriaFor(item.type).map((text) => ({ text, checked: false }))
    if (this.checks.length === 0) {
      host.appendChild(el('p', 'hint', 'No criteria apply (clean sample): judge the output directly.'))
      return
    }
    this.checks.forEach((check, index) => {
      const row = el('label', 'criterion-row')
      const box = el('input') as HTMLInputElement
      box.type = 'checkbox'
      box.addEventListener('change', () => {
        this.checks[index].checked = box.checked
      })
      row.appendChild(box)
      row.appendChild(el('span', 'criterion-text', check.text))
      host.appendChild(row)
    })
  }

  private renderControls(item: ItemView): void {
    const host = this.section('controls')
    clear(host)
    if (this.editing) return
    const comment = el('textarea', 'comment-box') as HTMLTextAreaElement
    comment.placeholder = 'optional note'
    comment.id = 'comment'
    host.appendChild(comment)

    const passButton = el('button', 'button button-pass', 'Pass (P)')
    passButton.addEventListener('click', () => void this.submit('Pass'))
    const failButton = el('button', 'button button-fail', 'Fail (F)')
    failButton.addEventListener('click', () => void this.submit('Fail'))
    const editButton = el('button', 'button button-edit', 'Edit (E)')
    editButton.addEventListener('click', () => this.enterEditMode())
    for (const button of [passButton, failButton, editButton]) host.appendChild(button)
  }

  private commentText(): string {
    const box = this.root.querySelector<HTMLTextAreaElement>('#comment')
    return box ? box.value : ''
  }

  async submit(verdict: Verdict): Promise<void> {
    if (!this.item || this.editing) return
    const notes = serializeCriteriaNotes(this.checks, this.commentText())
    try {
      await this.client.submitJudgment(this.item.item_id, verdict, notes, this.item.version)
      this.banner('')
      await this.loadNext()
    } catch (error) {
      if (error instanceof VersionConflictError) {
        // The item changed under us. Surface the state, keep the annotator's
        // input visible, and re-serve the queue; nothing is silently dropped.
        this.banner(
          `Item ${this.item.item_id} changed on the server — reloaded, please re-review. ` +
            `Your unsent verdict was "${verdict}"; notes:\n${notes}`,
          'conflict',
        )
        await this.loadNext()
        return
      }
      this.banner(`Submission failed: ${(error as Error).message}`, 'error')
    }
  }

  enterEditMode(): void {
    if (!this.item || this.editing) return
    this.editing = true
    const host = this.section('controls')
    clear(host)
    const item = this.item

    host.appendChild(
      el('p', 'hint', 'Fix the output, then select the hallucinated span with the cursor and save.'),
    )
    const editor = el('textarea', 'edit-box') as HTMLTextAreaElement
    editor.value = item.output
    editor.id = 'editor'
    host.appendChild(editor)

    const save = el('button', 'button button-save', 'Save edit (Enter)')
    save.addEventListener('click', () => void this.saveEdit())
    const cancel = el('button', 'button button-cancel', 'Cancel (Esc)')
    cancel.addEventListener('click', () => this.cancelEdit())
    host.appendChild(save)
    host.appendChild(cancel)
  }

  cancelEdit(): void {
    if (!this.editing) return
    this.editing = false
    if (this.item) this.renderControls(this.item)
  }

  async saveEdit(): Promise<void> {
    if (!this.item || !this.editing) return
    const editor = this.root.querySelector<HTMLTextAreaElement>('#editor')
    if (!editor) return
    const newOutput = editor.value
    // The textarea selection *is* the span: character offsets into the edited
    // text, so the annotator picks the intended occurrence, not the first.
    const newSpan = selectionToSpan(newOutput, editor.selectionStart, editor.selectionEnd)
    if (newSpan.length === 0) {
      this.banner('Select the hallucinated span inside the edited output before saving.', 'error')
      return
    }
    try {
      await this.client.submitEdit(this.item.item_id, newOutput, newSpan, this.item.version)
      this.banner('')
      await this.loadNext()
    } catch (error) {
      if (error instanceof VersionConflictError) {
        this.banner(
          `Item ${this.item.item_id} changed on the server — reloaded, please re-review. ` +
            `Your unsent edit:\n${newOutput}`,
          'conflict',
        )
        await this.loadNext()
        return
      }
      this.banner(`Edit rejected: ${(error as Error).message}`, 'error')
    }
  }
}
