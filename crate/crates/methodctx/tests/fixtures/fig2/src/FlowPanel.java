public class FlowPanel {
    private Dimension calculateFlowLayout(boolean bDoChilds) {
        if (getParent() != null && getParent() instanceof JViewport) {
            JViewport viewport = (JViewport) getParent();
            maxWidth = viewport.getExtentSize().width;
        } else if (getParent() != null) {
            maxWidth = getParent().getWidth();
        } else {
            maxWidth = getWidth();
        }
        Dimension d = m.getPreferredSize();
        return d;
    }

    public Dimension getPreferredSize() {
        // The consistent method name is getPreferredSize
        return calculateFlowLayout(false);
    }
}
