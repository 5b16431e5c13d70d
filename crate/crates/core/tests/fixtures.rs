use askloop_core::fixtures::{replay_fixture, Fixture, BUILTIN};

#[test]
fn bundled_transcripts_replay() {
    for name in BUILTIN {
        let r = replay_fixture(&Fixture::builtin(name).unwrap()).unwrap();
        for m in &r.mismatches {
            eprintln!("{name} Obs {}:\n  expected: {}\n  actual:   {}", m.obs, m.expected, m.actual);
        }
        assert!(r.ok(), "{name}");
        assert!(r.record.success(), "{name}");
    }
}
