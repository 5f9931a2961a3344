use std::path::PathBuf;

use voforge_core::graph::expand;
use voforge_core::model::{validate_business_configuration, validate_vbe};
use voforge_core::{load_bundle, parse_bundle, render, typecheck, ModelBundle};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn visitus() -> ModelBundle {
    load_bundle(&fixture("visitus.vbe")).unwrap()
}

#[test]
fn visitus_is_clean() {
    let b = visitus();
    let mut report = validate_vbe(&b.vbe, &b);
    for bc in &b.configurations {
        report.merge(validate_business_configuration(bc, &b));
    }
    report.merge(typecheck(&b));
    assert!(report.is_clean(), "{report}");
}

#[test]
fn visitus_renders_to_a_fixed_point() {
    let b = visitus();
    let text = render(&b);
    let again = parse_bundle(&text).unwrap();
    assert_eq!(again, b);
    assert_eq!(render(&again), text);
}

#[test]
fn expansion_sizes() {
    let b = visitus();
    let fig3 = expand(&b, "fig3").unwrap();
    assert_eq!((fig3.nodes.len(), fig3.edges.len()), (9, 6));
    let fig5 = expand(&b, "fig5").unwrap();
    assert_eq!((fig5.nodes.len(), fig5.edges.len()), (12, 8));
}

mod runtime {
    use std::collections::BTreeMap;

    use super::*;
    use voforge_core::runtime::{
        check_behaviour, ledger_from_trace, simulate, validate_conversation, CheckMode, Script, Status, Trace,
    };

    fn trace(name: &str) -> Trace {
        Trace::parse(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
    }

    fn sla() -> BTreeMap<String, i64> {
        BTreeMap::from([("KD".into(), 10), ("PERC".into(), 50)])
    }

    #[test]
    fn refund_traces() {
        let b = visitus();
        let spec = b.spec("Customer").unwrap();
        let ok = trace("refund_ok.trc");
        assert!(validate_conversation(spec, &ok).is_clean());
        let v = check_behaviour(spec, &ok, &sla(), CheckMode::Strict).unwrap();
        assert!(v.iter().all(|v| v.status == Status::Satisfied), "{v:?}");

        let low = trace("refund_low.trc");
        let v = check_behaviour(spec, &low, &sla(), CheckMode::Strict).unwrap();
        let bad: Vec<usize> = (0..v.len()).filter(|i| v[*i].status != Status::Satisfied).collect();
        assert_eq!(bad, vec![4]);
        assert_eq!(v[4].status, Status::Violated { at: 5 });
    }

    #[test]
    fn booking_script_simulates() {
        let b = visitus();
        let spec = b.spec("Customer").unwrap();
        let vo = b.vo_module("travelBK").unwrap();
        let script = Script::parse(&std::fs::read_to_string(fixture("booking.script")).unwrap()).unwrap();
        for seed in 0..20 {
            let t = simulate(vo, spec, &script, &sla(), seed).unwrap();
            assert!(validate_conversation(spec, &t).is_clean(), "{t}");
            assert_eq!(Trace::parse(&t.to_string()).unwrap(), t);
            assert!(ledger_from_trace("travelBK", spec, &t).unwrap().is_quiescent("travelBK"));
        }
    }
}
