//! Language files shipped with the crate, addressable as `builtin:NAME`.

use std::sync::OnceLock;

use crate::program::Language;

#[derive(Debug, Clone, Copy)]
pub struct Source {
    pub grammar: &'static str,
    pub annotations: &'static str,
    pub ext: &'static str,
}

pub const MINI_C: Source = Source {
    grammar: include_str!("../fixtures/mini-c.grammar"),
    annotations: include_str!("../fixtures/mini-c.ann"),
    ext: "c",
};

pub const MINI_IR: Source = Source {
    grammar: include_str!("../fixtures/mini-ir.grammar"),
    annotations: include_str!("../fixtures/mini-ir.ann"),
    ext: "mlir",
};

pub fn source(name: &str) -> Option<Source> {
    match name {
        "mini-c" => Some(MINI_C),
        "mini-ir" => Some(MINI_IR),
        _ => None,
    }
}

pub fn mini_c() -> &'static Language {
    static LANG: OnceLock<Language> = OnceLock::new();
    LANG.get_or_init(|| {
        Language::from_texts("mini-c", MINI_C.ext, MINI_C.grammar, MINI_C.annotations)
            .expect("shipped mini-C files load")
    })
}

pub fn mini_ir() -> &'static Language {
    static LANG: OnceLock<Language> = OnceLock::new();
    LANG.get_or_init(|| {
        Language::from_texts("mini-ir", MINI_IR.ext, MINI_IR.grammar, MINI_IR.annotations)
            .expect("shipped mini-IR files load")
    })
}
