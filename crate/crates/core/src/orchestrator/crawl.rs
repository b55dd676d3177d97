use super::{watch_seconds, FaultKind};
use crate::sim::{recommend, PuppetSession, SimError, SimWorld, WorldEpoch};
use crate::tree::TreeNode;

/// What one crawler observed along its path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub nodes: Vec<TreeNode>,
    /// Depth at which traversal stopped early, with the reason.
    pub halted: Option<(usize, String)>,
}

/// Step-wise traversal of one path, one depth per call to [`Crawler::step`].
#[derive(Debug)]
pub struct Crawler {
    session: PuppetSession,
    path_index: usize,
    seed: String,
    column: usize,
    n_rec: usize,
    watch_fraction: f64,
    record: PathRecord,
    next_depth: usize,
}

impl Crawler {
    pub fn new(
        session: PuppetSession,
        path_index: usize,
        seed: &str,
        column: usize,
        n_rec: usize,
        watch_fraction: f64,
    ) -> Self {
        Crawler {
            session,
            path_index,
            seed: seed.to_string(),
            column,
            n_rec,
            watch_fraction,
            record: PathRecord {
                nodes: Vec::new(),
                halted: None,
            },
            next_depth: 0,
        }
    }

    pub fn is_halted(&self) -> bool {
        self.record.halted.is_some()
    }

    pub fn session(&self) -> &PuppetSession {
        &self.session
    }

    fn halt(&mut self, depth: usize, reason: String) {
        self.record.halted = Some((depth, reason));
    }

    /// Visits the next depth against the platform state `epoch`. `fault`
    /// alters what the platform returns at this node. Halted crawlers do
    /// nothing.
    pub fn step(&mut self, epoch: &WorldEpoch<'_>, fault: Option<FaultKind>) {
        if self.is_halted() {
            return;
        }
        let depth = self.next_depth;
        self.next_depth += 1;
        let world = epoch.world;
        let (watched, clamped) = match self.record.nodes.last() {
            None => (self.seed.clone(), false),
            Some(parent) => {
                let recs = &parent.recommendations;
                let col = self.column.min(recs.len() - 1);
                (recs[col].video_id.clone(), col != self.column)
            }
        };
        if fault == Some(FaultKind::Crash) {
            self.halt(depth, "crawler crashed".into());
            return;
        }
        match self.visit(world, epoch, &watched, depth) {
            Ok(mut recs) => {
                if let Some(FaultKind::Truncate { len }) = fault {
                    recs.truncate(len);
                }
                if fault == Some(FaultKind::Empty) || recs.is_empty() {
                    self.halt(depth, "empty recommendation list".into());
                    return;
                }
                let mut node = TreeNode::new(self.path_index, depth, watched, recs);
                node.clamped = clamped;
                self.record.nodes.push(node);
            }
            Err(e) => self.halt(depth, e.to_string()),
        }
    }

    fn visit(
        &mut self,
        world: &SimWorld,
        epoch: &WorldEpoch<'_>,
        video: &str,
        depth: usize,
    ) -> Result<Vec<crate::tree::VideoMeta>, SimError> {
        let duration = world.video(video)?.duration_s;
        self.session
            .register_watch(world, video, watch_seconds(self.watch_fraction, duration))?;
        recommend(epoch, &mut self.session, video, depth, self.n_rec)
    }

    pub fn finish(self) -> PathRecord {
        self.record
    }
}

/// Traverses one path to `depth` on its own, advancing the platform one
/// epoch per depth.
pub fn traverse_path(
    session: PuppetSession,
    world: &SimWorld,
    seed: &str,
    column: usize,
    depth: usize,
    n_rec: usize,
    watch_fraction: f64,
) -> PathRecord {
    let mut crawler = Crawler::new(session, 0, seed, column, n_rec, watch_fraction);
    for j in 0..=depth {
        crawler.step(&world.at_epoch(j as u64), None);
    }
    crawler.finish()
}
