/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * The 2x2 composite (`side x side` RGBA): three key crops and one
     * background.
     */
    composite(alpha: number, eta: number, side: number, seed: bigint): Uint8Array;
    /**
     * Cell layout of [`Demo::composite`] as JSON.
     */
    composite_cells(alpha: number, eta: number, side: number, seed: bigint): string;
    count(): number;
    /**
     * RGBA bytes of scene `index`.
     */
    image(index: number): Uint8Array;
    /**
     * A class of scenes, each with one bright blob of random size and place.
     */
    constructor(seed: bigint);
    /**
     * Scores every scene: saliency grid, best window, key rectangle and
     * rank. JSON array in scene order.
     */
    score(alpha: number, eta: number): string;
    side(): number;
}

/**
 * Adds uniform noise of standard deviation `sigma` to a flat gray image
 * and returns the Laplacian noise estimate as JSON.
 */
export function noise_estimate(sigma: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_composite: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly demo_composite_cells: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly demo_count: (a: number) => number;
    readonly demo_image: (a: number, b: number) => [number, number, number, number];
    readonly demo_new: (a: bigint) => [number, number, number];
    readonly demo_score: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_side: (a: number) => number;
    readonly noise_estimate: (a: number, b: bigint) => [number, number, number, number];
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
