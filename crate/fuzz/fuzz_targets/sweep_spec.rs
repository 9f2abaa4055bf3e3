#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(doc) = crossfire_lab::fmt::config::parse_sections(text) {
            let _ = crossfire_lab::fmt::config::sweep_from_doc(&doc, &[]);
        }
    }
});
