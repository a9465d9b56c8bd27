use std::ffi::CString;

use pyo3::prelude::*;

fn run(code: &str) {
    pyo3::append_to_inittab!(routerlab_module_init);
    Python::attach(|py| {
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, None, None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[pymodule]
#[pyo3(name = "routerlab")]
fn routerlab_module_init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    routerlab_py::routerlab_module(m)
}

#[test]
fn bindings_round_trip() {
    run(r#"
import routerlab
assert routerlab.Pricing.default().output_ratio() == 13.75
ds = routerlab.Dataset.synthetic(7, 50)
assert len(ds) == 50
curve = routerlab.sweep_pre(ds)
assert [p["tau"] for p in curve][:2] == ["slm_only", "0.0"]
assert curve[-1]["tau"] == "llm_only" and curve[-1]["cost"] == 1.0
r = routerlab.evaluate(ds, policy="pre", score_source="refusal", assume_perfect=True)
assert r["togr"] is not None and r["agl"] is None
try:
    routerlab.weight_of(0.55)
    raise AssertionError("off-grid confidence accepted")
except routerlab.RouterlabError:
    pass
"#);
}
