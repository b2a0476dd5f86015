use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module(code: &std::ffi::CStr) {
    Python::attach(|py| {
        let m = PyModule::new(py, "textstyle").unwrap();
        textstyle_py::textstyle_py(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("ts", m).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn text_and_metric_functions() {
    with_module(
        cr#"
assert ts.tokenize("Hello, World 42") == ["hello", ",", "world", "<NUM>"]
assert ts.preprocess("") is None
assert abs(ts.spearman([1, 2, 3], [3, 2, 1]) + 1) < 1e-12
t = ts.EmbeddingTable(2)
t.insert("x", [1.0, 0.0])
t.insert("y", [0.0, 1.0])
assert ts.sentence_embedding(["x", "y"], t) == [0.0, 0.0, 0.5, 0.5, 1.0, 1.0]
assert ts.content_preservation(["x"], ["y"], t) == 0.0
try:
    ts.content_preservation(["zzz"], ["x"], t)
    raise AssertionError("undefined embedding accepted")
except ValueError:
    pass
"#,
    );
}

#[test]
fn model_training_and_transfer() {
    with_module(
        cr#"
s, l = ts.synth_corpus(2, 100)
m = ts.Model.train("auto-encoder", s, l, ["aa", "bb"], word_dim=4, enc_dim=6, batch_size=16, lr=1.0, max_epochs=1, vocab_size=60)
assert m.epoch == 1 and m.style_names == ["aa", "bb"]
out = m.transfer([s[0], []], "aa")
assert len(out) == 2 and out[1] == []
try:
    ts.Model.train("no-such-model", s, l, ["aa", "bb"])
    raise AssertionError("bad kind accepted")
except ValueError:
    pass
"#,
    );
}
