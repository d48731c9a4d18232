/** Poll a getter until the predicate accepts its value. 1s cadence by
 * default; callers cancel by invoking the returned stopper. */

export interface Poller {
  stop(): void;
  done: Promise<void>;
}

export function poll<T>(
  getter: () => Promise<T>,
  onUpdate: (value: T) => boolean, // return true when finished
  intervalMs = 1000,
): Poller {
  let stopped = false;
  let timer: ReturnType<typeof setTimeout> | undefined;
  let resolveDone: () => void;
  const done = new Promise<void>(resolve => { resolveDone = resolve; });

  const tick = async () => {
    if (stopped) return;
    let finished = false;
    try {
      finished = onUpdate(await getter());
    } catch {
      finished = false; // transient poll failures keep polling
    }
    if (finished || stopped) {
      stopped = true;
      resolveDone!();
      return;
    }
    timer = setTimeout(tick, intervalMs);
  };
  void tick();

  return {
    stop() {
      stopped = true;
      if (timer !== undefined) clearTimeout(timer);
      resolveDone!();
    },
    done,
  };
}
