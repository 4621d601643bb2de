use std::fmt;

use super::rules::GameRules;
use super::PHASES;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Player {
    P1 = 0,
    P2 = 1,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::P1, Player::P2];

    pub fn opponent(self) -> Player {
        match self {
            Player::P1 => Player::P2,
            Player::P2 => Player::P1,
        }
    }

    /// Who opens the betting round of `phase`.
    pub fn first_to_act(phase: u8) -> Player {
        if phase == 1 {
            Player::P1
        } else {
            Player::P2
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Check,
    Bet,
    Call,
    Raise,
    Fold,
    /// Chance reveals the next signal (hole cards or a board card).
    Deal,
}

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Chance,
    Decision { actor: Player },
    Fold { folder: Player },
    Showdown,
}

/// One node of the public betting tree. The tree is identical for every
/// deal; card information never appears here.
#[derive(Clone, Debug)]
pub struct PublicNode {
    pub kind: NodeKind,
    /// Number of chance nodes on the root path including this node.
    pub phase: u8,
    /// Chips committed by each player so far, antes included.
    pub committed: [i32; 2],
    /// Raises made in the current phase.
    pub raises: u8,
    /// A bet is outstanding in the current phase.
    pub facing_bet: bool,
    pub parent: NodeId,
    pub parent_action: Option<Action>,
    pub actions: Vec<Action>,
    pub children: Vec<NodeId>,
    /// Decision nodes: first accumulator slot in this node's
    /// (phase, actor) strategy row; `u32::MAX` otherwise.
    pub slot: u32,
}

impl PublicNode {
    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, NodeKind::Fold { .. } | NodeKind::Showdown)
    }

    pub fn pot(&self) -> i32 {
        self.committed[0] + self.committed[1]
    }

    /// 1 while the player has not folded.
    pub fn survival(&self, p: Player) -> u8 {
        match self.kind {
            NodeKind::Fold { folder } if folder == p => 0,
            _ => 1,
        }
    }
}

/// The full public tree, stored as a flat arena in depth-first order.
pub struct PublicTree {
    nodes: Vec<PublicNode>,
    /// Betting history digits of each node (action chars), for display.
    rules_betting_phases: u8,
    /// Accumulator row length (total action slots) per phase per actor.
    row_len: [[u32; 2]; PHASES],
    decision_count: usize,
}

impl fmt::Debug for PublicTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PublicTree({} nodes, {} decisions)",
            self.nodes.len(),
            self.decision_count
        )
    }
}

struct Builder<'r> {
    rules: &'r GameRules,
    nodes: Vec<PublicNode>,
    row_len: [[u32; 2]; PHASES],
    decision_count: usize,
}

impl PublicTree {
    pub fn build(rules: &GameRules) -> PublicTree {
        let mut b = Builder {
            rules,
            nodes: Vec::new(),
            row_len: [[0; 2]; PHASES],
            decision_count: 0,
        };
        let root = b.push(PublicNode {
            kind: NodeKind::Chance,
            phase: 1,
            committed: [rules.ante, rules.ante],
            raises: 0,
            facing_bet: false,
            parent: 0,
            parent_action: None,
            actions: vec![Action::Deal],
            children: Vec::new(),
            slot: u32::MAX,
        });
        let child = b.enter_phase(root, 1);
        b.nodes[root as usize].children.push(child);
        PublicTree {
            nodes: b.nodes,
            rules_betting_phases: rules.betting_phases,
            row_len: b.row_len,
            decision_count: b.decision_count,
        }
    }

    pub fn node(&self, id: NodeId) -> &PublicNode {
        &self.nodes[id as usize]
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &PublicNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (i as NodeId, n))
    }

    pub fn decision_count(&self) -> usize {
        self.decision_count
    }

    /// Total strategy slots (sum over that phase's decision nodes of their
    /// action counts) for one actor in one phase.
    pub fn row_len(&self, phase: u8, actor: Player) -> u32 {
        self.row_len[phase as usize - 1][actor as usize]
    }

    /// Legal actions. Chance nodes expose exactly `Deal`; terminals are an
    /// error.
    pub fn legal_actions(&self, id: NodeId) -> Result<&[Action]> {
        let n = self.node(id);
        if n.is_terminal() {
            return Err(Error::TerminalNode);
        }
        Ok(&n.actions)
    }

    /// Follow `action` from `id`.
    pub fn apply_action(&self, id: NodeId, action: Action) -> Result<NodeId> {
        let n = self.node(id);
        if n.is_terminal() {
            return Err(Error::TerminalNode);
        }
        n.actions
            .iter()
            .position(|&a| a == action)
            .map(|i| n.children[i])
            .ok_or(Error::IllegalAction(action))
    }

    /// Child lookup without legality distinction (test convenience).
    pub fn child(&self, id: NodeId, action: Action) -> Option<NodeId> {
        let n = self.node(id);
        n.actions
            .iter()
            .position(|&a| a == action)
            .map(|i| n.children[i])
    }

    /// First decision node of a phase's betting round, reached by dealing
    /// through earlier phases and checking them down. Panics if `phase` has
    /// no betting round.
    pub fn betting_start(&self, phase: u8) -> NodeId {
        assert!(phase <= self.rules_betting_phases);
        let mut id = self.root();
        loop {
            let n = self.node(id);
            match n.kind {
                NodeKind::Chance => id = n.children[0],
                NodeKind::Decision { .. } => {
                    if n.phase == phase {
                        return id;
                    }
                    id = self.child(id, Action::Check).expect("check is legal");
                }
                _ => unreachable!("ran past phase {phase}"),
            }
        }
    }

    /// Action sequence from the root (excluding deals), for display.
    pub fn history(&self, id: NodeId) -> Vec<Action> {
        let mut acts = Vec::new();
        let mut cur = id;
        while let Some(a) = self.node(cur).parent_action {
            if a != Action::Deal {
                acts.push(a);
            }
            cur = self.node(cur).parent;
        }
        acts.reverse();
        acts
    }
}

impl Builder<'_> {
    fn push(&mut self, node: PublicNode) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        id
    }

    /// Returns the node the phase's chance deal leads to: the betting round
    /// start, or (for check-down phases) whatever follows the round.
    fn enter_phase(&mut self, chance: NodeId, phase: u8) -> NodeId {
        if phase <= self.rules.betting_phases {
            self.betting_node(
                chance,
                Action::Deal,
                phase,
                Player::first_to_act(phase),
                self.nodes[chance as usize].committed,
                0,
                false,
                false,
            )
        } else {
            self.after_round(chance, Action::Deal, phase, self.nodes[chance as usize].committed)
        }
    }

    /// The betting round has closed (check-check or call): advance to the
    /// next chance node, or to showdown after the last phase.
    fn after_round(
        &mut self,
        parent: NodeId,
        via: Action,
        phase: u8,
        committed: [i32; 2],
    ) -> NodeId {
        if (phase as usize) < PHASES {
            let chance = self.push(PublicNode {
                kind: NodeKind::Chance,
                phase: phase + 1,
                committed,
                raises: 0,
                facing_bet: false,
                parent,
                parent_action: Some(via),
                actions: vec![Action::Deal],
                children: Vec::new(),
                slot: u32::MAX,
            });
            let child = self.enter_phase(chance, phase + 1);
            self.nodes[chance as usize].children.push(child);
            chance
        } else {
            self.push(PublicNode {
                kind: NodeKind::Showdown,
                phase,
                committed,
                raises: 0,
                facing_bet: false,
                parent,
                parent_action: Some(via),
                actions: Vec::new(),
                children: Vec::new(),
                slot: u32::MAX,
            })
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn betting_node(
        &mut self,
        parent: NodeId,
        via: Action,
        phase: u8,
        to_act: Player,
        committed: [i32; 2],
        raises: u8,
        facing_bet: bool,
        checked: bool,
    ) -> NodeId {
        let mut actions = Vec::with_capacity(3);
        if facing_bet {
            actions.push(Action::Call);
            if raises < self.rules.max_raises {
                actions.push(Action::Raise);
            }
            actions.push(Action::Fold);
        } else {
            actions.push(Action::Check);
            actions.push(Action::Bet);
        }

        let slot = self.row_len[phase as usize - 1][to_act as usize];
        self.row_len[phase as usize - 1][to_act as usize] += actions.len() as u32;
        self.decision_count += 1;

        let id = self.push(PublicNode {
            kind: NodeKind::Decision { actor: to_act },
            phase,
            committed,
            raises,
            facing_bet,
            parent,
            parent_action: Some(via),
            actions: actions.clone(),
            children: Vec::new(),
            slot,
        });

        let bet = self.rules.bet_size[phase as usize - 1];
        let me = to_act as usize;
        let opp = to_act.opponent() as usize;
        let mut children = Vec::with_capacity(actions.len());
        for &a in &actions {
            let child = match a {
                Action::Check => {
                    if checked {
                        self.after_round(id, a, phase, committed)
                    } else {
                        self.betting_node(
                            id,
                            a,
                            phase,
                            to_act.opponent(),
                            committed,
                            raises,
                            false,
                            true,
                        )
                    }
                }
                Action::Bet => {
                    let mut c = committed;
                    c[me] += bet;
                    self.betting_node(id, a, phase, to_act.opponent(), c, raises, true, checked)
                }
                Action::Call => {
                    let mut c = committed;
                    c[me] = c[opp];
                    self.after_round(id, a, phase, c)
                }
                Action::Raise => {
                    let mut c = committed;
                    c[me] = c[opp] + bet;
                    self.betting_node(
                        id,
                        a,
                        phase,
                        to_act.opponent(),
                        c,
                        raises + 1,
                        true,
                        checked,
                    )
                }
                Action::Fold => self.push(PublicNode {
                    kind: NodeKind::Fold { folder: to_act },
                    phase,
                    committed,
                    raises,
                    facing_bet,
                    parent: id,
                    parent_action: Some(a),
                    actions: Vec::new(),
                    children: Vec::new(),
                    slot: u32::MAX,
                }),
                Action::Deal => unreachable!(),
            };
            children.push(child);
        }
        self.nodes[id as usize].children = children;
        id
    }
}
