use std::ffi::CString;

use ontic::ontic;
use pyo3::prelude::*;

#[test]
fn smoke_script_runs_in_embedded_interpreter() {
    pyo3::append_to_inittab!(ontic);
    Python::initialize();
    Python::attach(|py| {
        let code = CString::new(include_str!("../../../python/smoke_test.py")).unwrap();
        py.run(&code, None, None).map_err(|e| e.display(py)).expect("smoke test passes");
    });
}
