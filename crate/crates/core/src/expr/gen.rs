//! Random expressions for tests and the `laws` command.

use rand::Rng;

use super::OrdExpr;

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub depth: u32,
    /// Largest numeral.
    pub max_nat: u64,
    /// Nesting allowed for `lim`.
    pub max_lims: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            depth: 4,
            max_nat: 5,
            max_lims: 2,
        }
    }
}

/// Any expression, with free variables drawn from `vars`.
pub fn random_expr<R: Rng>(rng: &mut R, cfg: GenConfig, vars: &[String]) -> OrdExpr {
    gen(rng, cfg.depth, cfg, cfg.max_lims, &mut vars.to_vec(), true)
}

/// A closed expression.
pub fn random_closed<R: Rng>(rng: &mut R, cfg: GenConfig) -> OrdExpr {
    gen(rng, cfg.depth, cfg, cfg.max_lims, &mut Vec::new(), false)
}

fn gen<R: Rng>(rng: &mut R, depth: u32, cfg: GenConfig, lims: u32, vars: &mut Vec<String>, free_ok: bool) -> OrdExpr {
    let leaf = depth == 0 || rng.gen_bool(0.25);
    if leaf {
        return match rng.gen_range(0..5) {
            0 => OrdExpr::Zero,
            1 if lims > 0 => OrdExpr::Omega,
            2 | 3 if !vars.is_empty() => OrdExpr::Var(vars[rng.gen_range(0..vars.len())].clone()),
            4 if free_ok && vars.is_empty() => OrdExpr::var("x"),
            _ => OrdExpr::Nat(rng.gen_range(0..=cfg.max_nat)),
        };
    }
    match rng.gen_range(0..3) {
        0 => OrdExpr::succ(gen(rng, depth - 1, cfg, lims, vars, free_ok)),
        1 if lims > 0 => {
            let v = ["n", "m", "k"][rng.gen_range(0..3)].to_string();
            vars.push(v.clone());
            let body = gen(rng, depth - 1, cfg, lims - 1, vars, free_ok);
            vars.pop();
            OrdExpr::Lim(v, Box::new(body))
        }
        _ => OrdExpr::max(
            gen(rng, depth - 1, cfg, lims, vars, free_ok),
            gen(rng, depth - 1, cfg, lims, vars, free_ok),
        ),
    }
}
