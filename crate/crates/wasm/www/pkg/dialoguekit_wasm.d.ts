/* tslint:disable */
/* eslint-disable */

/**
 * Injects one rule-based disfluency (`FP`, `DM`, `EDIT` or `REP`) into
 * `text`. Without a position, one is drawn from `seed`.
 */
export function disfluency_preview(text: string, kind: string, position: number | null | undefined, seed: number): string;

/**
 * Draws `n` user voices with the given accent weights and tallies them.
 */
export function sample_speakers(native: number, african: number, indian: number, asian: number, n: number, seed: number): string;

/**
 * Window size and thresholds shipped with the library.
 */
export function turn_taking_defaults(): string;

/**
 * Runs one strategy over `frames_json`, an array of `[p_listen, p_turnend,
 * p_bargein]` triples, and reports the per-frame scores with the decision.
 */
export function turn_taking_trace(strategy: string, window: number, turnend: number | null | undefined, bargein: number | null | undefined, frames_json: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly disfluency_preview: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly sample_speakers: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly turn_taking_defaults: () => [number, number];
    readonly turn_taking_trace: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
