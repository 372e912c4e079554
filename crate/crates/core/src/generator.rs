//! Model RB instance generators.
//!
//! Both generators are pure functions of [`Params`]. Constraint `j` draws its
//! scope and (for the plain generator) its relation from the stream
//! `("constraint", j)`, so the two variants share scopes for equal seeds.

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::Result;
use crate::instance::{Constraint, Instance, Provenance, Relation, Variant};
use crate::model::{derive_dimensions, Dimensions, Params};
use crate::seed::{rng_for, stream};

/// How the symmetric generator permutes value coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Permutations {
    #[default]
    Random,
    /// Every permutation is the identity, so each relation equals the base set.
    Identity,
}

pub fn generate_instance(params: &Params) -> Result<Instance> {
    let dims = derive_dimensions(params)?;
    generate_with_dimensions(params, &dims)
}

/// Plain generator with explicit dimensions (lets experiments override `m`).
pub fn generate_with_dimensions(params: &Params, dims: &Dimensions) -> Result<Instance> {
    let constraints = (0..dims.m)
        .map(|j| {
            let mut rng = rng_for(params.seed, stream::CONSTRAINT, j as u64);
            let scope = sample_scope(&mut rng, params.n, params.k);
            let relation = Relation::from_indices(
                params.k,
                dims.d,
                index::sample(&mut rng, dims.tuple_space, dims.relation_size),
            )?;
            Constraint::new(scope, relation)
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(
        params.n,
        dims.d,
        params.k,
        constraints,
        Provenance::generated(Variant::Plain, *params),
    )
}

pub fn generate_instance_symmetric(params: &Params) -> Result<Instance> {
    generate_symmetric_with(params, Permutations::Random)
}

/// Symmetry-set generator: one base set `R` of `relation_size` tuples, and
/// each constraint's relation is `R` with independent uniform permutations
/// applied to the values at scope positions `1..k` (position 0 is fixed).
pub fn generate_symmetric_with(params: &Params, permutations: Permutations) -> Result<Instance> {
    let dims = derive_dimensions(params)?;
    let mut base_rng = rng_for(params.seed, stream::SYMMETRY_BASE, 0);
    let base = Relation::from_indices(
        params.k,
        dims.d,
        index::sample(&mut base_rng, dims.tuple_space, dims.relation_size),
    )?;
    let base_tuples: Vec<Vec<usize>> = base.tuples().collect();

    let constraints = (0..dims.m)
        .map(|j| {
            let mut scope_rng = rng_for(params.seed, stream::CONSTRAINT, j as u64);
            let scope = sample_scope(&mut scope_rng, params.n, params.k);
            let mut perm_rng = rng_for(params.seed, stream::SYMMETRY_PERMUTATION, j as u64);
            let perms: Vec<Vec<usize>> = (1..params.k)
                .map(|_| {
                    let mut perm: Vec<usize> = (0..dims.d).collect();
                    if permutations == Permutations::Random {
                        perm.shuffle(&mut perm_rng);
                    }
                    perm
                })
                .collect();
            let relation = Relation::from_tuples(
                params.k,
                dims.d,
                base_tuples.iter().map(|t| {
                    let mut image = t.clone();
                    for (slot, perm) in image[1..].iter_mut().zip(&perms) {
                        *slot = perm[*slot];
                    }
                    image
                }),
            )?;
            Constraint::new(scope, relation)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut provenance = Provenance::generated(Variant::Symmetric, *params);
    provenance.base_relation = Some(base_tuples);
    Instance::new(params.n, dims.d, params.k, constraints, provenance)
}

fn sample_scope<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    index::sample(rng, n, k).into_vec()
}
