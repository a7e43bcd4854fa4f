export interface Debounced {
  (): void;
  cancel(): void;
  flush(): void;
}

/** Trailing-edge debounce: the call runs once, delayMs after the last poke. */
export function debounce(fn: () => void, delayMs: number): Debounced {
  let handle: ReturnType<typeof setTimeout> | null = null;
  const wrapped = () => {
    if (handle !== null) clearTimeout(handle);
    handle = setTimeout(() => {
      handle = null;
      fn();
    }, delayMs);
  };
  wrapped.cancel = () => {
    if (handle !== null) clearTimeout(handle);
    handle = null;
  };
  wrapped.flush = () => {
    if (handle === null) return;
    clearTimeout(handle);
    handle = null;
    fn();
  };
  return wrapped;
}
