//! Fixtures shared by the benchmarks.

use std::fmt::Write;

/// Workspace source with `n` propositional states `s0..` on a ring with chords.
/// `p` holds at every third state, `q` at every fifth. Frame `Cycle` keeps
/// only the ring edges, so it is functional and suits LTL.
pub fn ring_workspace(n: usize) -> String {
    let mut src = String::from("signature Props { pred p : 0; pred q : 0; }\nsignature Empty { }\n");
    for i in 0..n {
        let mut body = String::new();
        if i % 3 == 0 {
            body.push_str("p; ");
        }
        if i % 5 == 0 {
            body.push_str("q; ");
        }
        writeln!(src, "state s{i} over Props, Empty {{ {body}}}").unwrap();
    }
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let pairs: Vec<String> = (0..n)
        .flat_map(|i| [(i, (i + 1) % n), (i, (i * 7 + 3) % n)])
        .map(|(a, b)| format!("(s{a}, s{b})"))
        .collect();
    let ring: Vec<String> = (0..n).map(|i| format!("(s{i}, s{})", (i + 1) % n)).collect();
    for (name, edges) in [("Ring", pairs), ("Cycle", ring)] {
        writeln!(src, "frame {name} {{\n  states {};\n  rel T = {{{}}};\n}}", states.join(" "), edges.join(", ")).unwrap();
    }
    src
}
