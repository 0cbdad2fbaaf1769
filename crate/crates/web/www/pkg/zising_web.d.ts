/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    absorbed(): boolean;
    /**
     * Run the dynamics for `dt` more time units; returns the number of
     * flips.
     */
    advance(dt: number): number;
    /**
     * Classify the window of half-width `l` around site `(x, y)` (y up);
     * returns JSON with the window class and the wall report.
     */
    classify(x: number, y: number, l: number): string;
    corner_density_series(): Float64Array;
    /**
     * Quench: a fresh `size x size` torus with i.i.d. spins, +1 with
     * probability `p_plus`.
     */
    constructor(size: number, p_plus: number, seed: bigint);
    persistence_series(): Float64Array;
    /**
     * RGBA pixels, one per site, top row first; with `walls` set, sites
     * with a disagreeing neighbor are highlighted.
     */
    render(walls: boolean): Uint8Array;
    size(): number;
    time(): number;
    times(): Float64Array;
    wall_density_series(): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_absorbed: (a: number) => number;
    readonly demo_advance: (a: number, b: number) => number;
    readonly demo_classify: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_corner_density_series: (a: number) => [number, number];
    readonly demo_new: (a: number, b: number, c: bigint) => [number, number, number];
    readonly demo_persistence_series: (a: number) => [number, number];
    readonly demo_render: (a: number, b: number) => [number, number];
    readonly demo_size: (a: number) => number;
    readonly demo_time: (a: number) => number;
    readonly demo_times: (a: number) => [number, number];
    readonly demo_wall_density_series: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
