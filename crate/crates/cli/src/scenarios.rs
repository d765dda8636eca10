//! Reference scenarios shipped with the binary.

pub const BUILTIN: [(&str, &str); 4] = [
    ("fig4", include_str!("../scenarios/fig4.cfg")),
    ("fig6", include_str!("../scenarios/fig6.cfg")),
    ("radial", include_str!("../scenarios/radial.cfg")),
    ("larmor", include_str!("../scenarios/larmor.cfg")),
];

pub fn builtin(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".cfg").unwrap_or(name);
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
