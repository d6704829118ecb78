//! The class registry, multi-hot query vectors, and how the ontology graph
//! picks distractor classes for scene synthesis.
//!
//! "Other" classes are the ones with no hierarchical relationship to any
//! target: not the target itself, not an ancestor (a superset the target
//! belongs to), not a descendant (a more specific kind of it). Mixing only
//! those as distractors keeps training scenes unambiguous.

use btse::ontology::{ClassRegistry, OntologyGraph};

fn main() -> btse::Result<()> {
    let registry = ClassRegistry::default();
    println!("{} extraction classes: {}\n", registry.len(), registry.labels().join(", "));

    let query = registry.query_from_labels(&["siren", "baby_cry"])?;
    let bits: String =
        (0..query.len()).map(|i| if query.bit(i) { '1' } else { '0' }).collect();
    println!("query for siren + baby_cry: {bits}");
    println!("(bit positions are the registry order above)\n");

    // A slice of a larger audio taxonomy, parent -> child.
    let graph = OntologyGraph::new(
        vec![
            "Sounds".into(),
            "Human".into(),
            "Hands".into(),
            "Clapping".into(),
            "FingerSnapping".into(),
            "Speech".into(),
            "Animal".into(),
            "Dog".into(),
            "Bark".into(),
        ],
        vec![
            ("Sounds".into(), "Human".into()),
            ("Sounds".into(), "Animal".into()),
            ("Human".into(), "Hands".into()),
            ("Human".into(), "Speech".into()),
            ("Hands".into(), "Clapping".into()),
            ("Hands".into(), "FingerSnapping".into()),
            ("Animal".into(), "Dog".into()),
            ("Dog".into(), "Bark".into()),
        ],
    )?;

    for targets in [vec!["Clapping"], vec!["Dog"], vec!["Clapping", "Dog"]] {
        let others = graph.other_classes(&targets)?;
        println!("targets {targets:?} -> other classes {others:?}");
    }
    println!(
        "\nnote how targeting Clapping rules out Hands, Human and Sounds \
         (its ancestors) but keeps FingerSnapping (a sibling), and \
         targeting Dog also rules out Bark (a descendant)."
    );
    Ok(())
}
