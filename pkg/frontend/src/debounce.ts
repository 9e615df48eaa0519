/** Delay calls until the input settles; repeated calls within the window
 * replace the pending one. cancel() drops whatever is pending. */
export function debounce<T extends (...args: Parameters<T>) => void>(
  fn: T,
  delayMs = 300,
): T & { cancel: () => void } {
  let timer: ReturnType<typeof setTimeout> | null = null;

  const debounced = ((...args: Parameters<T>) => {
    if (timer) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = null;
      fn(...args);
    }, delayMs);
  }) as T & { cancel: () => void };

  debounced.cancel = () => {
    if (timer) {
      clearTimeout(timer);
      timer = null;
    }
  };

  return debounced;
}
