use std::fs;

use graphcomplex::cache::{code_version, DiskCache};
use graphcomplex::cohomology::{BasisMemo, Complex};

#[test]
fn second_build_hits_and_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let mut cold = DiskCache::new(dir.path());
    let a = Complex::build(3, &mut cold).unwrap();
    assert_eq!(cold.counters.hits, 0);
    assert!(cold.counters.misses > 0);

    let mut warm = DiskCache::new(dir.path());
    let b = Complex::build(3, &mut warm).unwrap();
    assert_eq!(warm.counters.misses, 0);
    assert_eq!(warm.counters.hits, cold.counters.misses);

    let c = Complex::build(3, &mut BasisMemo::default()).unwrap();
    for l in 0..=a.max_degree() {
        assert_eq!(a.delta(l), b.delta(l));
        assert_eq!(b.delta(l), c.delta(l));
        assert_eq!(b.betti(l), c.betti(l));
    }
}

#[test]
fn corrupted_entries_are_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    Complex::build(2, &mut DiskCache::new(dir.path())).unwrap();
    let basis = dir.path().join(format!("basis-k2-l1-{}.json", code_version()));
    let text = fs::read_to_string(&basis).unwrap();
    // swap an edge orientation in the first stored graph
    let bad = text.replacen("1>3", "3>1", 1);
    assert_ne!(bad, text);
    fs::write(&basis, bad).unwrap();
    let matrix = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).find(|p| p.to_string_lossy().contains("delta-k2-l0")).unwrap();
    fs::write(&matrix, "{not json").unwrap();

    let mut again = DiskCache::new(dir.path());
    let c = Complex::build(2, &mut again).unwrap();
    assert_eq!(again.counters.rejected, 2);
    let fresh = Complex::build(2, &mut BasisMemo::default()).unwrap();
    for l in 0..=c.max_degree() {
        assert_eq!(c.delta(l), fresh.delta(l));
    }
}

#[test]
fn stat_and_clear() {
    let dir = tempfile::tempdir().unwrap();
    let cache = DiskCache::new(dir.path().join("nested"));
    assert_eq!(cache.stat().unwrap().bases, 0);
    assert_eq!(cache.clear().unwrap(), 0);
    let mut cache = cache;
    Complex::build(2, &mut cache).unwrap();
    let stat = cache.stat().unwrap();
    assert!(stat.bases > 0 && stat.matrices > 0 && stat.bytes > 0);
    fs::write(cache.dir().join("basis-k9-l9-0000000000000000.json"), "{}").unwrap();
    assert_eq!(cache.stat().unwrap().stale, 1);
    assert_eq!(cache.clear().unwrap(), stat.bases + stat.matrices + 1);
    assert_eq!(cache.stat().unwrap().bases, 0);
}
