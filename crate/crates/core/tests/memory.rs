//! Peak heap use of a full synthetic run. One test only: the counters are
//! process-wide.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

use nbwalk::{make_instance, run_binary, ModelSpec, Similarity};

struct Counting;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let now = CURRENT.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

fn peak_bytes(n: usize, alpha: f64) -> usize {
    let spec = ModelSpec {
        n,
        q: 2,
        alpha,
        eta: 0.1,
        p_in: Similarity::gaussian(0.5, 1.0),
        p_out: Similarity::gaussian(-0.5, 1.0),
        seed: 1,
    };
    PEAK.store(CURRENT.load(Ordering::Relaxed), Ordering::Relaxed);
    let before = CURRENT.load(Ordering::Relaxed);
    let inst = make_instance(&spec).unwrap();
    let g = inst.centered_graph().unwrap();
    let out = run_binary(&g, &inst.data, 10, &mut inst.algorithm_rng()).unwrap();
    assert_eq!(out.assignments.len(), n);
    drop((inst, g, out));
    PEAK.load(Ordering::Relaxed) - before
}

#[test]
fn peak_memory_is_linear_in_alpha_n() {
    let base = peak_bytes(20_000, 8.0) as f64;
    let more_nodes = peak_bytes(80_000, 8.0) as f64;
    let denser = peak_bytes(20_000, 32.0) as f64;
    // Per sampled edge the run keeps a few dozen words, nowhere near n².
    let per_edge = more_nodes / (8.0 * 80_000.0 / 2.0);
    assert!(per_edge < 400.0, "{per_edge} bytes per edge");
    for (ratio, what) in [(more_nodes / base, "4x nodes"), (denser / base, "4x alpha")] {
        assert!((2.5..=5.5).contains(&ratio), "{what}: peak grew {ratio:.2}x");
    }
}
