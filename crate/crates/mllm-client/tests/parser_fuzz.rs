use vlnplan_mllm::parse::{parse_audit, parse_choice, parse_plan};

// deterministic byte soup; the parsers must return, never panic
#[test]
fn arbitrary_bytes_never_panic() {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let alphabet = br#"{}[]":,0123456789.-eE truefalsnchoicedistance_msatisfiedactionbacktrack_tosub_instructions\"#;
    for len in 0..400 {
        let bytes: Vec<u8> = (0..len)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                if state % 5 == 0 { (state >> 8) as u8 } else { alphabet[(state >> 16) as usize % alphabet.len()] }
            })
            .collect();
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_choice(&text, 3);
        let _ = parse_audit(&text, 2);
        let _ = parse_plan(&text);
    }
    let deep = "{\"choice\":".to_string() + &"[".repeat(10_000);
    assert!(parse_choice(&deep, 1).is_err());
}
