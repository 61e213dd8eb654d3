//! Random programs in the supported subset with bounded loops and no
//! recursion, for fuzzing and benchmarks.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub statements: usize,
    pub block_statements: usize,
    pub max_depth: usize,
    pub max_loop_bound: u64,
    pub functions: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { statements: 8, block_statements: 3, max_depth: 2, max_loop_bound: 5, functions: 2 }
    }
}

/// Program text for `seed`. The same seed always yields the same text.
pub fn program(seed: u64) -> String {
    program_with(seed, GenConfig::default())
}

pub fn program_with(seed: u64, cfg: GenConfig) -> String {
    let mut g = Gen {
        rng: SplitMix64::seed_from_u64(seed),
        cfg,
        out: String::new(),
        scopes: vec![Scope::default()],
        functions: Vec::new(),
        fresh: 0,
        indent: 0,
    };
    g.generate();
    g.out
}

#[derive(Default, Clone)]
struct Scope {
    numbers: Vec<String>,
    readonly: Vec<String>,
    arrays: Vec<(String, usize)>,
    strings: Vec<String>,
}

struct Gen {
    rng: SplitMix64,
    cfg: GenConfig,
    out: String,
    scopes: Vec<Scope>,
    functions: Vec<(String, usize)>,
    fresh: usize,
    indent: usize,
}

impl Gen {
    fn below(&mut self, n: u64) -> u64 {
        if n == 0 {
            0
        } else {
            self.rng.next_u64() % n
        }
    }

    fn chance(&mut self, percent: u64) -> bool {
        self.below(100) < percent
    }

    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn numbers(&self) -> Vec<String> {
        self.scopes.iter().flat_map(|s| s.numbers.iter().chain(&s.readonly).cloned()).collect()
    }

    fn writable(&self) -> Vec<String> {
        self.scopes.iter().flat_map(|s| s.numbers.iter().cloned()).collect()
    }

    fn arrays(&self) -> Vec<(String, usize)> {
        self.scopes.iter().flat_map(|s| s.arrays.iter().cloned()).collect()
    }

    fn strings(&self) -> Vec<String> {
        self.scopes.iter().flat_map(|s| s.strings.iter().cloned()).collect()
    }

    fn pick<T: Clone>(&mut self, items: &[T]) -> Option<T> {
        if items.is_empty() {
            None
        } else {
            let i = self.below(items.len() as u64) as usize;
            Some(items[i].clone())
        }
    }

    fn generate(&mut self) {
        for _ in 0..self.cfg.functions {
            if self.chance(70) {
                self.function();
            }
        }
        let n = 1 + self.below(3);
        for _ in 0..n {
            self.number_decl();
        }
        if self.chance(80) {
            self.array_decl();
        }
        if self.chance(40) {
            let s = self.name("s");
            let init = ["a", "b", "xy", ""][self.below(4) as usize];
            self.line(&format!("let {s} = \"{init}\";"));
            self.scopes[0].strings.push(s);
        }
        for _ in 0..self.cfg.statements {
            self.statement(0);
        }
    }

    fn function(&mut self) {
        let f = self.name("f");
        let arity = 1 + self.below(2) as usize;
        let params: Vec<String> = (0..arity).map(|i| format!("p{i}")).collect();
        self.line(&format!("function {f}({}) {{", params.join(", ")));
        self.indent += 1;
        let saved = std::mem::replace(
            &mut self.scopes,
            vec![Scope { numbers: params, ..Scope::default() }],
        );
        let n = 1 + self.below(self.cfg.block_statements as u64);
        for _ in 0..n {
            self.statement(1);
        }
        let e = self.expr(2);
        self.line(&format!("return {e};"));
        self.scopes = saved;
        self.indent -= 1;
        self.line("}");
        self.functions.push((f, arity));
    }

    fn number_decl(&mut self) {
        let v = self.name("v");
        let e = self.expr(2);
        let kw = if self.chance(15) { "const" } else { "let" };
        self.line(&format!("{kw} {v} = {e};"));
        let scope = self.scopes.last_mut().expect("scope");
        if kw == "const" {
            scope.readonly.push(v);
        } else {
            scope.numbers.push(v);
        }
    }

    fn array_decl(&mut self) {
        let a = self.name("a");
        let len = 1 + self.below(5) as usize;
        let items: Vec<String> = (0..len).map(|_| self.below(20).to_string()).collect();
        self.line(&format!("let {a} = [{}];", items.join(", ")));
        self.scopes.last_mut().expect("scope").arrays.push((a, len));
    }

    fn block(&mut self, depth: usize, setup: impl FnOnce(&mut Scope)) {
        self.indent += 1;
        let mut scope = Scope::default();
        setup(&mut scope);
        self.scopes.push(scope);
        let n = 1 + self.below(self.cfg.block_statements as u64);
        for _ in 0..n {
            self.statement(depth + 1);
        }
        self.scopes.pop();
        self.indent -= 1;
    }

    fn statement(&mut self, depth: usize) {
        let nested = depth < self.cfg.max_depth;
        match self.below(if nested { 12 } else { 8 }) {
            0 => self.number_decl(),
            1 | 2 => {
                if let Some(v) = self.pick(&self.writable()) {
                    let op = ["=", "+=", "-=", "*="][self.below(4) as usize];
                    let e = self.expr(2);
                    self.line(&format!("{v} {op} {e};"));
                } else {
                    self.number_decl();
                }
            }
            3 => {
                if let Some(v) = self.pick(&self.writable()) {
                    let op = if self.chance(50) { "++" } else { "--" };
                    self.line(&format!("{v}{op};"));
                }
            }
            4 => {
                if let Some((a, len)) = self.pick(&self.arrays()) {
                    let e = self.expr(2);
                    if self.chance(30) {
                        self.line(&format!("{a}[{a}.length] = {e};"));
                    } else {
                        let i = self.below(len as u64);
                        self.line(&format!("{a}[{i}] = {e};"));
                    }
                } else {
                    self.array_decl();
                }
            }
            5 => {
                if let Some(s) = self.pick(&self.strings()) {
                    let e = self.expr(1);
                    self.line(&format!("{s} = {s} + {e};"));
                }
            }
            6 => {
                if depth == 0 && self.scopes.len() == 1 && !self.functions.is_empty() {
                    let e = self.call();
                    self.line(&format!("{e};"));
                } else {
                    self.number_decl();
                }
            }
            7 => self.array_decl(),
            8 | 9 => self.if_statement(depth),
            10 => self.for_statement(depth),
            _ => self.while_statement(depth),
        }
    }

    fn if_statement(&mut self, depth: usize) {
        let c = self.condition(2);
        self.line(&format!("if ({c}) {{"));
        self.block(depth, |_| {});
        if self.chance(50) {
            self.line("} else {");
            self.block(depth, |_| {});
        }
        self.line("}");
    }

    fn for_statement(&mut self, depth: usize) {
        let i = self.name("i");
        let bound = self.below(self.cfg.max_loop_bound + 1);
        self.line(&format!("for (let {i} = 0; {i} < {bound}; {i}++) {{"));
        let iv = i.clone();
        self.block(depth, move |s| s.readonly.push(iv));
        self.line("}");
    }

    fn while_statement(&mut self, depth: usize) {
        let w = self.name("w");
        let bound = self.below(self.cfg.max_loop_bound + 1);
        self.line(&format!("let {w} = 0;"));
        self.scopes.last_mut().expect("scope").readonly.push(w.clone());
        self.line(&format!("while ({w} < {bound}) {{"));
        self.block(depth, |_| {});
        self.indent += 1;
        // The counter is read-only for generated statements, so the loop ends.
        self.line(&format!("{w}++;"));
        self.indent -= 1;
        self.line("}");
        let scope = self.scopes.last_mut().expect("scope");
        scope.readonly.retain(|x| *x != w);
        scope.numbers.push(w);
    }

    fn call(&mut self) -> String {
        let (f, arity) = self.pick(&self.functions.clone()).expect("function");
        let args: Vec<String> = (0..arity).map(|_| self.expr(1)).collect();
        format!("{f}({})", args.join(", "))
    }

    fn condition(&mut self, depth: usize) -> String {
        match self.below(if depth > 0 { 6 } else { 3 }) {
            0 | 1 => {
                let (a, b) = (self.expr(1), self.expr(1));
                let op = ["<", "<=", ">", ">=", "===", "!=="][self.below(6) as usize];
                format!("{a} {op} {b}")
            }
            2 => self.expr(1),
            3 => {
                let c = self.condition(depth - 1);
                format!("!({c})")
            }
            _ => {
                let (a, b) = (self.condition(depth - 1), self.condition(depth - 1));
                let op = if self.chance(50) { "&&" } else { "||" };
                format!("({a}) {op} ({b})")
            }
        }
    }

    fn expr(&mut self, depth: usize) -> String {
        let leafy = depth == 0;
        match self.below(if leafy { 4 } else { 11 }) {
            0 | 1 => self.below(20).to_string(),
            2 => self.pick(&self.numbers()).unwrap_or_else(|| "1".into()),
            3 => match self.pick(&self.arrays()) {
                Some((a, len)) => {
                    if self.chance(30) {
                        format!("{a}.length")
                    } else if self.chance(3) {
                        // Past the end: raises a runtime error here, `undefined` in JavaScript.
                        format!("{a}[{}]", len as u64 + self.below(3))
                    } else {
                        format!("{a}[{}]", self.below(len as u64))
                    }
                }
                None => "2".into(),
            },
            4..=6 => {
                let (a, b) = (self.expr(depth - 1), self.expr(depth - 1));
                let op = ["+", "-", "*", "+", "-", "*", "/", "%"][self.below(8) as usize];
                format!("({a} {op} {b})")
            }
            7 => {
                let a = self.expr(depth - 1);
                format!("(-{a})")
            }
            8 => {
                let f = ["floor", "ceil", "abs"][self.below(3) as usize];
                let a = self.expr(depth - 1);
                format!("Math.{f}({a})")
            }
            9 => {
                let f = if self.chance(50) { "min" } else { "max" };
                let (a, b) = (self.expr(depth - 1), self.expr(depth - 1));
                format!("Math.{f}({a}, {b})")
            }
            _ => {
                if self.scopes.len() == 1 && !self.functions.is_empty() && self.indent == 0 {
                    self.call()
                } else {
                    self.below(10).to_string()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    #[test]
    fn generated_programs_parse() {
        for seed in 0..200 {
            let src = program(seed);
            if let Err(e) = parse(&src) {
                panic!("seed {seed}: {e}\n{src}");
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(program(7), program(7));
        assert_ne!(program(7), program(8));
    }
}
