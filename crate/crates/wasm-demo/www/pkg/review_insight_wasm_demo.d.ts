/* tslint:disable */
/* eslint-disable */

/**
 * Registry rows for the model picker.
 */
export function models(): string;

/**
 * Packs `count` synthetic reviews of `block_chars` characters each into a
 * model's prompt window.
 */
export function pack(model_id: string, count: number, block_chars: number, template_overhead: bigint): string;

/**
 * Ranks the bundled listing's reviews for `question` and packs the best
 * ones into `prompt_window` tokens.
 */
export function rank(question: string, prompt_window: bigint, limit: number): string;

/**
 * Sends `count` requests of `tokens` each, `spacing_ms` apart, through the
 * Gemini free-tier limiter (or a custom requests-per-minute limit when
 * `rpm` is non-zero). Denied requests are not retried.
 */
export function simulate_rate_limit(count: number, spacing_ms: number, tokens: bigint, rpm: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly models: () => [number, number];
    readonly pack: (a: number, b: number, c: number, d: number, e: bigint) => [number, number];
    readonly rank: (a: number, b: number, c: bigint, d: number) => [number, number];
    readonly simulate_rate_limit: (a: number, b: number, c: bigint, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
