//! Autoregressive sampling from the noisy-count conditional distributions.

use std::collections::BTreeSet;

use rand::Rng;

use super::model::DpNgramModel;
use super::tokenizer::{tokenize, TokenId, BOS_ID, EOS_ID};
use super::GenerationError;
use crate::rng::SeedSource;
use crate::structuring::SectionGroup;
use crate::terms::TermList;

/// Everything the generator conditions on for one section.
#[derive(Debug, Clone)]
pub struct GenerationContext {
    /// Task instruction templated from the group name. The n-gram
    /// reference generator does not condition on it; neural
    /// implementations of the contract would.
    pub instruction: String,
    /// Already generated sections, strictly before `group` in taxonomy
    /// order.
    pub previous_sections: Vec<(SectionGroup, String)>,
    pub term_list: TermList,
    pub group: SectionGroup,
}

impl GenerationContext {
    pub fn new(
        instruction: impl Into<String>,
        previous_sections: Vec<(SectionGroup, String)>,
        term_list: TermList,
        group: SectionGroup,
    ) -> Result<Self, GenerationError> {
        if !previous_sections.iter().all(|(g, _)| *g < group) {
            return Err(GenerationError::ContextOrder(group));
        }
        Ok(Self {
            instruction: instruction.into(),
            previous_sections,
            term_list,
            group,
        })
    }
}

/// Decoding knobs. Biases are on the natural-log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodingParams {
    pub max_tokens: usize,
    pub temperature: f64,
    /// Multiplicative count damping on tokens already emitted in the
    /// current section.
    pub repetition_penalty: f64,
    /// Additive logit bias for tokens appearing in the term list.
    pub term_bias: f64,
    /// Additive logit bias on the end-of-section token.
    pub eos_bias: f64,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            max_tokens: 256,
            temperature: 0.1,
            repetition_penalty: 1.2,
            term_bias: 2.0,
            eos_bias: 0.5,
        }
    }
}

/// Token ids receiving the term bias: every in-vocabulary token of every
/// term in the list.
fn term_token_ids(model: &DpNgramModel, terms: &TermList) -> BTreeSet<TokenId> {
    let mut ids = BTreeSet::new();
    for term in &terms.terms {
        for token in tokenize(term) {
            if let Some(id) = model.vocab().id(&token) {
                ids.insert(id);
            }
        }
    }
    ids
}

/// Initial (n-1)-token context: the tail of the previous section's tokens,
/// left-padded with begin markers.
fn seed_context(model: &DpNgramModel, previous: &[(SectionGroup, String)]) -> Vec<TokenId> {
    let width = model.order() - 1;
    let mut ctx = vec![BOS_ID; width];
    if width == 0 {
        return ctx;
    }
    if let Some((_, text)) = previous.last() {
        let ids: Vec<TokenId> = tokenize(text)
            .iter()
            .map(|t| model.vocab().id_or_unk(t))
            .collect();
        let take = ids.len().min(width);
        let offset = width - take;
        ctx[offset..].copy_from_slice(&ids[ids.len() - take..]);
    }
    ctx
}

/// One decoding step: picks the next token id from the backoff row under
/// the context, or end-of-section when no mass is reachable.
fn next_token(
    model: &DpNgramModel,
    group: SectionGroup,
    context: &[TokenId],
    emitted: &BTreeSet<TokenId>,
    term_ids: &BTreeSet<TokenId>,
    params: &DecodingParams,
    rng: &mut impl Rng,
) -> TokenId {
    let Some(row) = model.backoff_row(group, context) else {
        return EOS_ID;
    };
    let mut logits: Vec<(TokenId, f64)> = Vec::with_capacity(row.entries.len());
    for &(tok, count) in &row.entries {
        let mut c = count;
        if emitted.contains(&tok) {
            c /= params.repetition_penalty;
        }
        let mut logit = c.ln();
        // The term bias pulls list terms into the section; once a term
        // token has appeared it competes unbiased, otherwise the bias
        // overrides the repetition penalty indefinitely.
        if term_ids.contains(&tok) && !emitted.contains(&tok) {
            logit += params.term_bias;
        }
        if tok == EOS_ID {
            logit += params.eos_bias;
        }
        logits.push((tok, logit));
    }
    if logits.is_empty() {
        return EOS_ID;
    }
    if params.temperature == 0.0 {
        // Greedy: maximum logit, ties to the lowest token id. Entries are
        // id-sorted, so a strict comparison keeps the earliest.
        let mut best = logits[0];
        for &cand in &logits[1..] {
            if cand.1 > best.1 {
                best = cand;
            }
        }
        return best.0;
    }
    let max_logit = logits.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits
        .iter()
        .map(|(_, l)| ((l - max_logit) / params.temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut draw = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        draw -= w;
        if draw <= 0.0 {
            return logits[i].0;
        }
    }
    logits.last().expect("nonempty").0
}

/// Generates one section: autoregressive sampling seeded from the tail of
/// the previous section, stopping at the end-of-section token or
/// `max_tokens`. Deterministic given the rng stream.
pub fn generate_section(
    model: &DpNgramModel,
    ctx: &GenerationContext,
    params: &DecodingParams,
    rng: &mut impl Rng,
) -> Result<String, GenerationError> {
    if params.max_tokens == 0 {
        return Err(GenerationError::MaxTokensZero);
    }
    let term_ids = term_token_ids(model, &ctx.term_list);
    let mut context = seed_context(model, &ctx.previous_sections);
    let mut emitted: BTreeSet<TokenId> = BTreeSet::new();
    let mut out_tokens: Vec<String> = Vec::new();
    for _ in 0..params.max_tokens {
        let tok = next_token(model, ctx.group, &context, &emitted, &term_ids, params, rng);
        if tok == EOS_ID {
            break;
        }
        out_tokens.push(model.vocab().token(tok).to_string());
        emitted.insert(tok);
        if model.order() > 1 {
            context.rotate_left(1);
            let last = context.len() - 1;
            context[last] = tok;
        }
    }
    Ok(out_tokens.join(" "))
}

/// Renders a synthetic note from its generated sections: group headers in
/// taxonomy order, bodies beneath them.
pub fn render_note(sections: &[(SectionGroup, String)]) -> String {
    let mut parts = Vec::with_capacity(sections.len());
    for (group, text) in sections {
        parts.push(format!("{}:\n{}", group.display_name(), text));
    }
    let mut note = parts.join("\n\n");
    note.push('\n');
    note
}

/// Generates `k` candidate notes section by section in taxonomy order.
/// Candidates differ only through their derived seeds.
pub fn generate_candidates(
    model: &DpNgramModel,
    term_lists: &[TermList],
    k: usize,
    seeds: &SeedSource,
    note_key: &str,
    instruction_template: &str,
    params: &DecodingParams,
) -> Result<Vec<String>, GenerationError> {
    if k == 0 {
        return Err(GenerationError::ZeroCandidates);
    }
    if !term_lists
        .windows(2)
        .all(|w| w[0].section_group < w[1].section_group)
    {
        return Err(GenerationError::TermListOrder);
    }
    let mut candidates = Vec::with_capacity(k);
    for i in 0..k {
        let mut sections: Vec<(SectionGroup, String)> = Vec::with_capacity(term_lists.len());
        for terms in term_lists {
            let group = terms.section_group;
            let instruction = instruction_template.replace("{group}", group.display_name());
            let ctx = GenerationContext::new(instruction, sections.clone(), terms.clone(), group)?;
            let mut rng = seeds.stream(&["generate", note_key, &i.to_string(), group.key()]);
            let text = generate_section(model, &ctx, params, &mut rng)?;
            sections.push((group, text));
        }
        candidates.push(render_note(&sections));
    }
    Ok(candidates)
}
