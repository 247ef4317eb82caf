//! Annotation service for blinded pairwise judgments of pronoun translations.
//!
//! Each campaign shows every registered annotator every sampled item, in an
//! annotator-specific order, with the reference and the noisy candidate
//! assigned to positions A and B by a seeded hash. Judgments go to an
//! append-only journal before they are acknowledged.
//!
//! HTTP API:
//!
//! | method | path | result |
//! |---|---|---|
//! | GET | `/campaigns/{id}/next?annotator=…` | next task or `done` |
//! | POST | `/campaigns/{id}/judgments` | `{annotator, item_id, choice}`; 409 when it replaces an earlier judgment |
//! | GET | `/campaigns/{id}/report` | agreement report and per pronoun pair table |
//! | GET | `/campaigns/{id}/export` | current judgments as JSON lines |

pub mod campaign;
pub mod config;
pub mod error;
pub mod http;
pub mod store;

pub use campaign::{Campaign, Candidate, CharSpan, Task};
pub use config::CampaignConfig;
pub use error::{Result, ServiceError};
pub use http::{router, serve, shared, AppState};
pub use store::{Ack, CampaignReport, JournalEntry, NextTask, PairAgreementRow, Store};
