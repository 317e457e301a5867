#![no_main]

use libfuzzer_sys::fuzz_target;
use spc_rsma::conic::parse_dump;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(problem) = parse_dump(text) {
        let dump = problem.to_dump();
        assert_eq!(parse_dump(&dump).expect("round trip"), problem);
        let _ = problem.validate();
    }
});
